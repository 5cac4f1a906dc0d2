#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include "roughevo/roughpath.hpp"
#include "roughevo/spectral_scale.hpp"

namespace roughevo {

using RoughPathPtr = std::shared_ptr<const RoughPath>;

/// Pair (y, y') sampled on the driver grid from index `offset` on, with y at level alpha and
/// y' = (y'_1, ..., y'_d) at level alpha - gamma.
class ControlledPath {
public:
  ControlledPath(RoughPathPtr driver, ScalePtr scale, std::size_t offset, std::vector<CVector> y,
                 std::vector<std::vector<CVector>> yprime, double alpha, double gamma);

  /// y' = 0 everywhere.
  static ControlledPath without_derivative(RoughPathPtr driver, ScalePtr scale, std::size_t offset,
                                           std::vector<CVector> y, double alpha, double gamma);

  const RoughPath& driver() const { return *driver_; }
  const RoughPathPtr& driver_ptr() const { return driver_; }
  const ScalePtr& scale() const { return scale_; }
  std::size_t offset() const { return offset_; }
  std::size_t points() const { return y_.size(); }
  std::size_t dimension() const { return driver_->dimension(); }
  double alpha() const { return alpha_; }
  double gamma() const { return gamma_; }
  double time(std::size_t i) const { return driver_->grid()[offset_ + i]; }
  /// dX^c between local indices i and j.
  double dx(std::size_t i, std::size_t j, std::size_t c) const { return driver_->increment(offset_ + i, offset_ + j, c); }

  const CVector& y(std::size_t i) const { return y_[i]; }
  const CVector& yprime(std::size_t i, std::size_t c) const { return yp_[i * dimension() + c]; }
  GalerkinVector value(std::size_t i) const { return GalerkinVector(scale_, y_[i]); }
  std::vector<GalerkinVector> derivative(std::size_t i) const;

  /// R^y_{t_j, t_i} = y_j - y_i - sum_c y'_c(t_i) dX^c_{t_i, t_j}.
  CVector remainder(std::size_t i, std::size_t j) const;

  /// The same pair viewed at another level (the remainder exponents are unchanged).
  ControlledPath at_level(double alpha) const;
  ControlledPath scaled(Complex factor) const;

private:
  RoughPathPtr driver_;
  ScalePtr scale_;
  std::size_t offset_;
  std::vector<CVector> y_;
  std::vector<CVector> yp_;
  double alpha_;
  double gamma_;
};

struct RemainderReport {
  SeminormReport gamma_level;      // [R]_{gamma, alpha - gamma}
  SeminormReport two_gamma_level;  // [R]_{2 gamma, alpha - 2 gamma}
  /// max over pairs and beta in [gamma, 2 gamma] of |R|_{alpha-beta} (t-s)^{-beta} divided by
  /// [R]_gamma^{(2 gamma - beta)/gamma} [R]_{2 gamma}^{(beta - gamma)/gamma}; at most 1.
  double interpolation_ratio = 0.0;
};

/// Pair sups run over an index subsample of at most `max_points` points (0 = every point).
RemainderReport remainder(const ControlledPath& cp, std::size_t max_points = 0);

struct ControlledNorm {
  double sup_y = 0.0;
  double sup_yprime = 0.0;
  double yprime_holder = 0.0;
  double remainder_gamma = 0.0;
  double remainder_two_gamma = 0.0;
  double total() const { return sup_y + sup_yprime + yprime_holder + remainder_gamma + remainder_two_gamma; }
};

/// |y|_{0,a} + |y'|_{0,a-g} + [dy']_{g,a-2g} + [R]_{g,a-g} + [R]_{2g,a-2g}.
ControlledNorm controlled_norm_parts(const ControlledPath& cp, std::size_t max_points = 0);
double controlled_norm(const ControlledPath& cp, std::size_t max_points = 0);

/// Distance with Hoelder exponents gamma' (levels still shifted by gamma) between pairs over
/// possibly different drivers on the same grid.
ControlledNorm controlled_distance_parts(const ControlledPath& a, const ControlledPath& b, double gamma_prime,
                                         std::size_t max_points = 0);
double controlled_distance(const ControlledPath& a, const ControlledPath& b, double gamma_prime,
                           std::size_t max_points = 0);

/// (F(y), DF(y) y') at level alpha - shift(F).
ControlledPath compose(const ControlledPath& cp, const Nonlinearity& f);

/// Rows i, t, component (0 = y, c = y'_c), k..., re, im after a JSON metadata line.
void write_controlled_csv(std::ostream& os, const ControlledPath& cp);

}  // namespace roughevo
