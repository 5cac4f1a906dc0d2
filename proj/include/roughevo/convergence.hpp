#pragma once

#include <iosfwd>
#include <span>
#include <vector>

namespace roughevo {

struct OrderFit {
  double order = 0.0;
  double intercept = 0.0;
  /// Root-mean-square residual of the log-log fit.
  double residual = 0.0;
};

/// Least squares of log e against log h: log e = intercept + order log h.
OrderFit fit_order(std::span<const double> h, std::span<const double> e);

/// Rows (h, e) of a refinement study.
class ConvergenceTable {
public:
  void add(double h, double error);
  std::size_t size() const { return h_.size(); }
  const std::vector<double>& resolutions() const { return h_; }
  const std::vector<double>& errors() const { return e_; }
  OrderFit fit() const { return fit_order(h_, e_); }
  /// True when errors strictly decrease along the rows.
  bool monotone() const;
  /// Columns h, error, order_so_far (local order against the previous row).
  void write_csv(std::ostream& os) const;

private:
  std::vector<double> h_;
  std::vector<double> e_;
};

}  // namespace roughevo
