#pragma once

#include <string>
#include <vector>

#include "roughevo/controlled.hpp"
#include "roughevo/propagator.hpp"
#include "roughevo/sewing.hpp"

namespace roughevo {

/// Integrand of sum_a Y_a dX^a: one controlled path (Y_a, Y'_{a,b}) per driver component.
using Integrand = std::vector<ControlledPath>;

/// xi_{t_j,t_i} = sum_a Y_a(t_i) dX^a_{t_i,t_j} + sum_{a,b} Y'_{a,b}(t_i) XX^{ba}_{t_j,t_i} (local indices).
CVector compensated_germ(const Integrand& y, std::size_t i, std::size_t j);

/// z_t = int_{t_first}^t S_{t,r} Y_r dX_r on every point of the integrand's grid, through
/// z_{i+1} = S_{i+1,i}(z_i + xi_{i+1,i}), which is the affine product over the finest partition.
/// The result carries z' = Y and sits at the integrand's level.
ControlledPath rough_convolve(const Propagator& s, const Integrand& y);
ControlledPath rough_convolve(const Propagator& s, const ControlledPath& y);

/// The same integral between local indices [first, last] by affine grid sewing, with the
/// residuals of the index-dyadic coarsenings in the history.
SewResult<AffineElement> rough_convolve_sewn(const Propagator& s, const Integrand& y, std::size_t first,
                                             std::size_t last);

struct LocalExpansion {
  std::vector<double> lengths;  // t - s for pairs anchored at the first point
  std::vector<double> defects;  // |delta^S z - S xi|_{alpha - 2 gamma + beta}
  double sup_ratio = 0.0;       // sup over pairs of defect / (t-s)^{3 gamma - beta}
  double slope = 0.0;           // log-log fit of defects against lengths
};

/// Probes |z_t - S_{t,s} z_s - S_{t,s} xi_{t,s}|_{alpha-2gamma+beta} over grid pairs.
LocalExpansion local_expansion(const Propagator& s, const Integrand& y, const ControlledPath& z, double beta,
                               std::size_t max_points = 129);

struct DriftResult {
  CVector value;
  /// Difference against the same rule on every second grid point (0 when too few cells).
  double richardson_difference = 0.0;
  std::string rule;
};

/// int_{t_first}^{t_last} S_{t_last, r} N(u_r) dr with u given on global grid indices first..last.
/// Composite Simpson when N loses no regularity, exponential (phi-function) product rule otherwise.
DriftResult drift_convolve(const Propagator& s, const Nonlinearity& n, const std::vector<CVector>& u,
                           std::size_t first, std::size_t last);

/// Scalar controlled integrand: y_i in C^d and y'_i in C^{d x d}, y'(a, b) = d y_a / d X^b.
struct ScalarIntegrand {
  std::vector<Eigen::VectorXcd> y;
  std::vector<CMatrix> yprime;
};

/// Cumulative int_{t_offset}^{t_i} y dX (S = Id) at every point of the integrand.
std::vector<Complex> plain_rough_integral(const RoughPath& x, const ScalarIntegrand& y, std::size_t offset = 0);

}  // namespace roughevo
