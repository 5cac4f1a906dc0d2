#include "roughevo/controlled.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include <json.hpp>

namespace roughevo {

namespace {

std::vector<std::size_t> index_subsample(std::size_t n, std::size_t max_points) {
  std::size_t stride = 1;
  if (max_points >= 2)
    while ((n - 1) / stride + 1 > max_points) stride *= 2;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
  if (idx.back() != n - 1) idx.push_back(n - 1);
  return idx;
}

Eigen::ArrayXd squared_weights(const SpectralScale& scale, double beta) { return scale.weights(beta).array().square(); }

double wnorm(const Eigen::ArrayXd& w2, const CVector& v) { return std::sqrt((w2 * v.array().abs2()).sum()); }

void require_aligned(const ControlledPath& a, const ControlledPath& b) {
  if (a.points() != b.points() || a.offset() != b.offset() || !a.driver().grid().same_as(b.driver().grid()))
    throw InvalidArgument("controlled paths live on different grids");
  if (a.dimension() != b.dimension()) throw InvalidArgument("controlled paths have different driver dimensions");
  if (!a.scale()->same_as(*b.scale())) throw InvalidArgument("controlled paths live on different scales");
}

// Norm parts of a - b (b may be null) with Hoelder exponent gp.
ControlledNorm parts(const ControlledPath& a, const ControlledPath* b, double gp, std::size_t max_points) {
  const auto& scale = *a.scale();
  const double alpha = a.alpha(), gamma = a.gamma();
  const Eigen::ArrayXd w0 = squared_weights(scale, alpha);
  const Eigen::ArrayXd w1 = squared_weights(scale, alpha - gamma);
  const Eigen::ArrayXd w2 = squared_weights(scale, alpha - 2.0 * gamma);
  const std::size_t d = a.dimension();
  const auto y = [&](std::size_t i) -> CVector { return b ? CVector(a.y(i) - b->y(i)) : a.y(i); };
  const auto yp = [&](std::size_t i, std::size_t c) -> CVector {
    return b ? CVector(a.yprime(i, c) - b->yprime(i, c)) : a.yprime(i, c);
  };
  ControlledNorm out;
  for (std::size_t i = 0; i < a.points(); ++i) {
    out.sup_y = std::max(out.sup_y, wnorm(w0, y(i)));
    double acc = 0.0;
    for (std::size_t c = 0; c < d; ++c) acc += (w1 * yp(i, c).array().abs2()).sum();
    out.sup_yprime = std::max(out.sup_yprime, std::sqrt(acc));
  }
  const auto idx = index_subsample(a.points(), max_points);
  CVector r;
  for (std::size_t p = 0; p < idx.size(); ++p)
    for (std::size_t q = p + 1; q < idx.size(); ++q) {
      const std::size_t i = idx[p], j = idx[q];
      const double dt = a.time(j) - a.time(i);
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        CVector diff = a.yprime(j, c) - a.yprime(i, c);
        if (b) diff -= b->yprime(j, c) - b->yprime(i, c);
        acc += (w2 * diff.array().abs2()).sum();
      }
      out.yprime_holder = std::max(out.yprime_holder, std::sqrt(acc) / std::pow(dt, gp));
      r = a.remainder(i, j);
      if (b) r -= b->remainder(i, j);
      out.remainder_gamma = std::max(out.remainder_gamma, wnorm(w1, r) / std::pow(dt, gp));
      out.remainder_two_gamma = std::max(out.remainder_two_gamma, wnorm(w2, r) / std::pow(dt, 2.0 * gp));
    }
  return out;
}

}  // namespace

ControlledPath::ControlledPath(RoughPathPtr driver, ScalePtr scale, std::size_t offset, std::vector<CVector> y,
                               std::vector<std::vector<CVector>> yprime, double alpha, double gamma)
    : driver_(std::move(driver)), scale_(std::move(scale)), offset_(offset), y_(std::move(y)), alpha_(alpha),
      gamma_(gamma) {
  if (!driver_) throw InvalidArgument("controlled path needs a driver");
  if (y_.empty()) throw InvalidArgument("controlled path needs at least one point");
  if (offset_ + y_.size() > driver_->grid().size()) throw InvalidArgument("controlled path exceeds the driver grid");
  if (yprime.size() != y_.size()) throw InvalidArgument("derivative table length differs from the path");
  const std::size_t d = driver_->dimension();
  const auto n = static_cast<Eigen::Index>(scale_->size());
  yp_.reserve(y_.size() * d);
  for (std::size_t i = 0; i < y_.size(); ++i) {
    if (y_[i].size() != n) throw InvalidArgument("controlled path value does not match the scale");
    if (yprime[i].size() != d) throw InvalidArgument("derivative needs one component per driver dimension");
    for (auto& v : yprime[i]) {
      if (v.size() != n) throw InvalidArgument("controlled path derivative does not match the scale");
      yp_.push_back(std::move(v));
    }
  }
}

ControlledPath ControlledPath::without_derivative(RoughPathPtr driver, ScalePtr scale, std::size_t offset,
                                                  std::vector<CVector> y, double alpha, double gamma) {
  const std::size_t d = driver->dimension();
  std::vector<std::vector<CVector>> yp(
      y.size(), std::vector<CVector>(d, CVector::Zero(static_cast<Eigen::Index>(scale->size()))));
  return ControlledPath(std::move(driver), std::move(scale), offset, std::move(y), std::move(yp), alpha, gamma);
}

std::vector<GalerkinVector> ControlledPath::derivative(std::size_t i) const {
  std::vector<GalerkinVector> out;
  for (std::size_t c = 0; c < dimension(); ++c) out.emplace_back(scale_, yprime(i, c));
  return out;
}

CVector ControlledPath::remainder(std::size_t i, std::size_t j) const {
  CVector r = y_[j] - y_[i];
  for (std::size_t c = 0; c < dimension(); ++c) r -= dx(i, j, c) * yprime(i, c);
  return r;
}

ControlledPath ControlledPath::at_level(double alpha) const {
  ControlledPath out = *this;
  out.alpha_ = alpha;
  return out;
}

ControlledPath ControlledPath::scaled(Complex factor) const {
  ControlledPath out = *this;
  for (auto& v : out.y_) v *= factor;
  for (auto& v : out.yp_) v *= factor;
  return out;
}

RemainderReport remainder(const ControlledPath& cp, std::size_t max_points) {
  const auto& scale = *cp.scale();
  const double alpha = cp.alpha(), gamma = cp.gamma();
  const Eigen::ArrayXd w1 = squared_weights(scale, alpha - gamma);
  const Eigen::ArrayXd w2 = squared_weights(scale, alpha - 2.0 * gamma);
  const auto idx = index_subsample(cp.points(), max_points);
  RemainderReport out;
  constexpr int kBetas = 5;
  std::vector<Eigen::ArrayXd> wb;
  std::vector<double> betas;
  for (int m = 0; m < kBetas; ++m) {
    betas.push_back(gamma * (1.0 + static_cast<double>(m) / (kBetas - 1)));
    wb.push_back(squared_weights(scale, alpha - betas.back()));
  }
  std::vector<double> beta_sup(kBetas, 0.0);
  for (std::size_t p = 0; p < idx.size(); ++p)
    for (std::size_t q = p + 1; q < idx.size(); ++q) {
      const std::size_t i = idx[p], j = idx[q];
      const double dt = cp.time(j) - cp.time(i);
      const CVector r = cp.remainder(i, j);
      const double g = wnorm(w1, r) / std::pow(dt, gamma);
      const double g2 = wnorm(w2, r) / std::pow(dt, 2.0 * gamma);
      if (g > out.gamma_level.value) out.gamma_level = SeminormReport{g, cp.offset() + i, 0, cp.offset() + j};
      if (g2 > out.two_gamma_level.value)
        out.two_gamma_level = SeminormReport{g2, cp.offset() + i, 0, cp.offset() + j};
      for (int m = 0; m < kBetas; ++m)
        beta_sup[m] = std::max(beta_sup[m], wnorm(wb[m], r) / std::pow(dt, betas[m]));
    }
  const double rg = out.gamma_level.value, r2 = out.two_gamma_level.value;
  for (int m = 0; m < kBetas; ++m) {
    const double bound = std::pow(rg, (2.0 * gamma - betas[m]) / gamma) * std::pow(r2, (betas[m] - gamma) / gamma);
    if (bound > 0.0) out.interpolation_ratio = std::max(out.interpolation_ratio, beta_sup[m] / bound);
  }
  return out;
}

ControlledNorm controlled_norm_parts(const ControlledPath& cp, std::size_t max_points) {
  return parts(cp, nullptr, cp.gamma(), max_points);
}

double controlled_norm(const ControlledPath& cp, std::size_t max_points) {
  return controlled_norm_parts(cp, max_points).total();
}

ControlledNorm controlled_distance_parts(const ControlledPath& a, const ControlledPath& b, double gamma_prime,
                                         std::size_t max_points) {
  require_aligned(a, b);
  if (!(gamma_prime > 0.0 && gamma_prime <= a.gamma())) throw InvalidArgument("gamma' must lie in (0, gamma]");
  return parts(a, &b, gamma_prime, max_points);
}

double controlled_distance(const ControlledPath& a, const ControlledPath& b, double gamma_prime,
                           std::size_t max_points) {
  return controlled_distance_parts(a, b, gamma_prime, max_points).total();
}

ControlledPath compose(const ControlledPath& cp, const Nonlinearity& f) {
  std::vector<CVector> z;
  std::vector<std::vector<CVector>> zp;
  z.reserve(cp.points());
  zp.reserve(cp.points());
  for (std::size_t i = 0; i < cp.points(); ++i) {
    const GalerkinVector v = cp.value(i);
    z.push_back(f.apply(v).coefficients());
    std::vector<CVector> comps;
    for (auto& g : f.derivatives(v, cp.derivative(i))) comps.push_back(std::move(g.coefficients()));
    zp.push_back(std::move(comps));
  }
  return ControlledPath(cp.driver_ptr(), cp.scale(), cp.offset(), std::move(z), std::move(zp),
                        cp.alpha() - f.shift(), cp.gamma());
}

void write_controlled_csv(std::ostream& os, const ControlledPath& cp) {
  const auto& scale = *cp.scale();
  const nlohmann::json meta = {{"n", scale.dimension()}, {"K", scale.radius()},   {"k0", scale.base_exponent()},
                               {"alpha", cp.alpha()},    {"gamma", cp.gamma()}, {"offset", cp.offset()},
                               {"d", cp.dimension()}};
  os << "# " << meta.dump() << "\n" << std::setprecision(17);
  os << (scale.dimension() == 2 ? "i,t,component,k1,k2,re,im\n" : "i,t,component,k1,re,im\n");
  const auto row = [&](std::size_t i, std::size_t comp, const CVector& v) {
    for (std::size_t m = 0; m < scale.size(); ++m) {
      const Mode& k = scale.mode(m);
      os << i << "," << cp.time(i) << "," << comp << "," << k[0] << ",";
      if (scale.dimension() == 2) os << k[1] << ",";
      os << v[static_cast<Eigen::Index>(m)].real() << "," << v[static_cast<Eigen::Index>(m)].imag() << "\n";
    }
  };
  for (std::size_t i = 0; i < cp.points(); ++i) {
    row(i, 0, cp.y(i));
    for (std::size_t c = 0; c < cp.dimension(); ++c) row(i, c + 1, cp.yprime(i, c));
  }
}

}  // namespace roughevo
