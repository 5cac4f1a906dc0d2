#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "roughevo/linear_op.hpp"
#include "roughevo/sewing.hpp"
#include "roughevo/timebase.hpp"

namespace roughevo {

/// Hoelder and sector data of a generator family; only rho and the control enter computations.
struct FamilyMetadata {
  /// ||L_t - L_s||_{L(B_1, B_0)} <= omega(s, t)^rho.
  double rho = 1.0;
  std::optional<Control> omega;
  double lambda_shift = 0.0;
  double aperture = 0.0;
  double sector_constant = 1.0;
};

/// t -> L_t on a spectral scale, either diagonal multipliers or dense matrices.
class OperatorFamily {
public:
  using DiagonalFn = std::function<Eigen::VectorXd(double)>;
  using DenseFn = std::function<CMatrix(double)>;

  static OperatorFamily diagonal(ScalePtr scale, DiagonalFn symbols, FamilyMetadata meta = {});
  static OperatorFamily dense(ScalePtr scale, DenseFn matrices, FamilyMetadata meta = {});
  static OperatorFamily constant(ScalePtr scale, const LinearOp& op, FamilyMetadata meta = {});

  LinearOp at(double t) const;
  bool is_diagonal() const { return static_cast<bool>(diag_); }
  const ScalePtr& scale() const { return scale_; }
  const FamilyMetadata& metadata() const { return meta_; }
  FamilyMetadata& metadata() { return meta_; }

  /// Pointwise sum, used for splitting references.
  friend OperatorFamily operator+(const OperatorFamily& a, const OperatorFamily& b);

private:
  ScalePtr scale_;
  DiagonalFn diag_;
  DenseFn dense_;
  FamilyMetadata meta_;
};

/// Heat family L_t = -nu(t) |k|^2.
OperatorFamily heat_family(ScalePtr scale, std::function<double(double)> nu);
/// Divergence-form diffusion d_x(a_t d_x u) with coefficient field a_t (real, positive).
OperatorFamily divergence_family(ScalePtr scale, std::function<GalerkinVector(double)> coefficient);

/// Fits rho and the linear-control constant of ||L_t - L_s||_{L(B_1,B_0)} on grid pairs.
FamilyMetadata estimate_holder(const OperatorFamily& family, const Partition& grid);

/// exp((t - s) L_s).
LinearOp exp_step(const OperatorFamily& family, double s, double t);

struct PropagatorOptions {
  double tol = 1e-12;
  int max_level = 14;
  int extrapolation = 4;
  /// Level of the operator norm used by the sewing metric.
  double beta = 0.0;
};

/// Sewn propagator S_{t,s} on a grid: every cell is sewn once, longer spans are cell products.
class Propagator {
public:
  Propagator(OperatorFamily family, Partition grid, PropagatorOptions options = {});

  const OperatorFamily& family() const { return family_; }
  const Partition& grid() const { return grid_; }
  const PropagatorOptions& options() const { return options_; }
  std::size_t size() const { return family_.scale()->size(); }

  /// S_{t_{i+1}, t_i}.
  const LinearOp& cell(std::size_t i) const { return cells_[i]; }
  /// S_{t_j, t_i}, i <= j.
  LinearOp between(std::size_t i, std::size_t j) const;
  /// S_{t,s} for arbitrary s <= t in the grid range; off-grid ends use one exponential step each.
  LinearOp operator()(double s, double t) const;

  /// The same propagator on a coarser grid whose points are all grid points; cells become spans.
  Propagator restrict_to(const Partition& coarse) const;

  double max_cell_residual() const { return max_residual_; }
  int max_cell_level() const { return max_level_; }
  bool converged() const { return converged_; }
  const std::string& diagnostic() const { return diagnostic_; }

private:
  Propagator(const Propagator& fine, Partition coarse);

  OperatorFamily family_;
  Partition grid_;
  PropagatorOptions options_;
  std::vector<LinearOp> cells_;
  struct Cache {
    std::map<std::pair<std::size_t, std::size_t>, LinearOp> spans;
    std::mutex mutex;
  };
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
  double max_residual_ = 0.0;
  int max_level_ = 0;
  bool converged_ = true;
  std::string diagnostic_;
};

/// Sews exp_step on [s, t] directly in the operator algebra at level options.beta.
SewResult<LinearOp> sew_propagator(const OperatorFamily& family, double s, double t,
                                   const PropagatorOptions& options = {});

Propagator build_propagator(const OperatorFamily& family, const Partition& grid, const PropagatorOptions& options = {});

struct PropertyReport {
  double cocycle_residual = 0.0;
  std::vector<std::pair<double, double>> smoothing_ratios;  // (sigma, sup ratio)
  double proximity_max = 0.0;
  double proximity_min = 0.0;
  double proximity_spread = 0.0;
  double identity_proximity = 0.0;
  double derivative_order = 0.0;
  double growth_lambda = 0.0;
  nlohmann::json to_json() const;
};

struct PropertyProbe {
  double alpha = 0.0;
  std::vector<double> sigmas{0.25, 0.5, 1.0};
  double identity_sigma = 0.5;
  /// Grid points used for pair sups (uniform index subsample).
  std::size_t max_points = 65;
};

PropertyReport verify_properties(const Propagator& s, const PropertyProbe& probe = {});

/// sup over grid pairs of (t-s)^sigma |S_{t,s} x|_{alpha+sigma} / |x|_alpha; the operator norm when x is empty.
double smoothing_ratio(const Propagator& s, double sigma, double alpha, const CVector& x = {},
                       std::size_t max_points = 0);

/// sup over tau in (0, T] of tau^sigma |e^{-|k|^2 tau}| (1+|k|^2)^sigma over the scale's modes, for the heat family.
double heat_smoothing_oracle(const SpectralScale& scale, double sigma, double horizon);

struct SplitResult {
  LinearOp op;
  double error = 0.0;            // L(B_2, B_0) norm of the difference
  double max_entry_error = 0.0;  // entrywise
  CMatrix difference;            // split product minus reference
};

SplitResult lie_trotter(const OperatorFamily& a, const OperatorFamily& b, double s, double t, int n,
                        const PropagatorOptions& options = {});
SplitResult strang(const OperatorFamily& a, const OperatorFamily& b, double s, double t, int n,
                   const PropagatorOptions& options = {});

struct CommutatorProbe {
  std::vector<double> taus;
  std::vector<double> ratios;
  double spread = 1.0;
};

/// ||e^{tau A_v} e^{tau B_u} - e^{tau B_u} e^{tau A_v}|| / tau^2 for each tau (L(B_beta) norm).
CommutatorProbe commutator_probe(const OperatorFamily& a, const OperatorFamily& b, double u, double v,
                                 const std::vector<double>& taus, double beta = 0.0);

}  // namespace roughevo
