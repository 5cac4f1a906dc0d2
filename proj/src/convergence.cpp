#include "roughevo/convergence.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "roughevo/timebase.hpp"

namespace roughevo {

OrderFit fit_order(std::span<const double> h, std::span<const double> e) {
  if (h.size() != e.size()) throw InvalidArgument("convergence table columns differ in length");
  if (h.size() < 3) throw InvalidArgument("an order fit needs at least three rows");
  const std::size_t n = h.size();
  double sx = 0.0, sy = 0.0;
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(h[i] > 0.0) || !(e[i] > 0.0)) throw InvalidArgument("order fits need positive resolutions and errors");
    x[i] = std::log(h[i]);
    y[i] = std::log(e[i]);
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / static_cast<double>(n), my = sy / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw InvalidArgument("order fits need distinct resolutions");
  OrderFit fit;
  fit.order = sxy / sxx;
  fit.intercept = my - fit.order * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - fit.intercept - fit.order * x[i];
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / static_cast<double>(n));
  return fit;
}

void ConvergenceTable::add(double h, double error) {
  h_.push_back(h);
  e_.push_back(error);
}

bool ConvergenceTable::monotone() const {
  for (std::size_t i = 1; i < e_.size(); ++i)
    if (!(e_[i] < e_[i - 1])) return false;
  return true;
}

void ConvergenceTable::write_csv(std::ostream& os) const {
  os << std::setprecision(17) << "h,error,order_so_far\n";
  for (std::size_t i = 0; i < h_.size(); ++i) {
    os << h_[i] << "," << e_[i] << ",";
    if (i > 0 && e_[i] > 0.0 && e_[i - 1] > 0.0) os << std::log(e_[i] / e_[i - 1]) / std::log(h_[i] / h_[i - 1]);
    os << "\n";
  }
}

}  // namespace roughevo
