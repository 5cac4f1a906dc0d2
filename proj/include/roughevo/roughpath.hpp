#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "roughevo/timebase.hpp"

namespace roughevo {

enum class LiftKind {
  SmoothQuadrature,
  PiecewiseLinear,
  BrownianIto,
  BrownianStratonovich,
  FbmPiecewiseLinear,
  Custom,
};

std::string to_string(LiftKind kind);
LiftKind lift_kind_from_string(const std::string& name);

struct LiftSpec {
  LiftKind kind = LiftKind::Custom;
  std::uint64_t seed = 0;
  double hurst = 0.5;
  int refine = 1;
};

/// Two-step rough path (X, XX) sampled on a grid, XX^{ij}_{t,s} = int_s^t dX^i_{r,s} dX^j_r.
///
/// The second level is stored anchored at the grid start, A_j = XX_{t_j, t_0}; every other
/// pair is reconstructed through the Chen identity
///   XX_{t,s} = XX_{t,0} - XX_{s,0} - dX_{s,0} (x) dX_{t,s},
/// so storage is linear in the grid size. Objects that deliberately violate Chen can be
/// built from an explicit pair function instead.
class RoughPath {
public:
  using PairFunction = std::function<Eigen::MatrixXd(std::size_t, std::size_t)>;

  RoughPath(Partition grid, std::vector<Eigen::VectorXd> values, std::vector<Eigen::MatrixXd> anchored,
            double gamma, LiftSpec spec = {});

  static RoughPath from_pair_function(Partition grid, std::vector<Eigen::VectorXd> values, PairFunction second,
                                      double gamma);

  std::size_t dimension() const { return dim_; }
  const Partition& grid() const { return grid_; }
  double gamma() const { return gamma_; }
  const LiftSpec& spec() const { return spec_; }
  bool anchored() const { return !pair_fn_; }

  Eigen::VectorXd value(std::size_t i) const;
  double value(std::size_t i, std::size_t component) const { return x_[i * dim_ + component]; }
  /// X_{t_j} - X_{t_i}.
  Eigen::VectorXd increment(std::size_t i, std::size_t j) const;
  double increment(std::size_t i, std::size_t j, std::size_t component) const {
    return x_[j * dim_ + component] - x_[i * dim_ + component];
  }
  /// XX_{t_j, t_i} for i <= j.
  Eigen::MatrixXd second(std::size_t i, std::size_t j) const;
  /// Entry (a, b) of XX_{t_j, t_i}.
  double second(std::size_t i, std::size_t j, std::size_t a, std::size_t b) const;

  /// Dilation (c X, c^2 XX).
  RoughPath scaled(double factor) const;
  RoughPath with_gamma(double gamma) const;

private:
  RoughPath() = default;
  Partition grid_{std::vector<double>{0.0, 1.0}};
  std::size_t dim_ = 0;
  double gamma_ = 0.5;
  LiftSpec spec_;
  std::vector<double> x_;         // (k+1) * d
  std::vector<double> anchored_;  // (k+1) * d * d, row-major blocks
  PairFunction pair_fn_;
};

/// Canonical lift of a smooth path, iterated integrals by Gauss quadrature on a refine-times-finer grid.
RoughPath lift_smooth(const std::function<Eigen::VectorXd(double)>& path, const Partition& grid, int refine,
                      double gamma = 0.5);

/// Geometric lift of the piecewise-linear interpolation of samples on the grid.
RoughPath lift_piecewise_linear(const Partition& grid, const std::vector<Eigen::VectorXd>& samples,
                                double gamma = 0.5);

enum class Convention { Ito, Stratonovich };

/// Brownian motion sampled on a grid refined `refine` times. The Stratonovich level is the
/// piecewise-linear lift of the fine samples; the Ito level subtracts (t - s)/2 I from it.
RoughPath sample_bm_lift(int dimension, const Partition& grid, std::uint64_t seed, Convention convention,
                         int refine = 1, double gamma = 0.45);

/// Fractional Brownian motion sampled exactly (Cholesky of the covariance) on the refined grid,
/// lifted piecewise-linearly.
RoughPath sample_fbm_lift(double hurst, const Partition& grid, std::uint64_t seed, int refine = 1,
                          int dimension = 1, double gamma = 0.0);

/// 1/2 (s^{2H} + t^{2H} - |t-s|^{2H}).
double fbm_covariance(double hurst, double s, double t);

/// max over grid triples s<u<t of |XX_{t,s} - XX_{t,u} - XX_{u,s} - dX_{u,s} (x) dX_{t,u}| (max entry).
/// Grids with more than `max_points` points are subsampled with a uniform index stride.
double chen_residual(const RoughPath& rp, std::size_t max_points = 257);

/// max over grid pairs of |Sym XX_{t,s} - 1/2 dX (x) dX|.
double geometric_defect(const RoughPath& rp);

/// [X - Y]_gamma + [XX - YY]_{2 gamma} on the common grid. Pair sups use an index subsample of at
/// most `max_points` points when it is nonzero.
double rough_distance(const RoughPath& a, const RoughPath& b, double gamma, std::size_t max_points = 0);
/// rho_gamma(0, X).
double rough_norm(const RoughPath& a, double gamma, std::size_t max_points = 0);

/// [X]_gamma (Euclidean increments) and [XX]_{2 gamma} (max-entry) on the grid.
SeminormReport first_level_seminorm(const RoughPath& a, double gamma, std::size_t max_points = 0);
SeminormReport second_level_seminorm(const RoughPath& a, double gamma, std::size_t max_points = 0);

void write_roughpath_csv(std::ostream& os, const RoughPath& rp);
RoughPath read_roughpath_csv(std::istream& is);

}  // namespace roughevo
