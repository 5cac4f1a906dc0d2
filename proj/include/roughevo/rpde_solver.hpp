#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "roughevo/controlled.hpp"
#include "roughevo/convolution.hpp"
#include "roughevo/propagator.hpp"

namespace roughevo {

struct SolveParams {
  double alpha = 0.0;
  /// 0 takes the driver's exponent.
  double gamma = 0.0;
  /// 0 takes (sigma + gamma) / 2.
  double gamma_prime = 0.0;
  double tol = 1e-10;
  int max_iterations = 100;
  /// c in T* = min(1, c (1 + rho_gamma(X))^{-1/eps}).
  double window_constant = 1.0;
  /// Lower bound on the window length in grid cells.
  std::size_t min_window_cells = 8;
  double blowup = 1e6;
  int max_restarts = 20;
  /// Pair subsample used by the Picard stopping distance (0 = every grid pair).
  std::size_t distance_points = 65;
};

/// du = L_t u dt + N(u) dt + sum_a F_a(u) dX^a.
struct RpdeProblem {
  const Propagator* propagator = nullptr;
  NonlinearityPtr drift;
  std::vector<NonlinearityPtr> diffusion;  // one per driver component
  GalerkinVector initial;
  RoughPathPtr driver;
};

struct WindowReport {
  std::size_t first = 0;
  std::size_t last = 0;
  int iterations = 0;
  std::vector<double> contraction;  // ratios of successive Picard distances
  double residual = 0.0;            // final Picard distance
  int restarts = 0;                 // window halvings
};

struct Solution {
  ControlledPath u;
  std::vector<WindowReport> windows;
  double tau = 0.0;
  std::size_t last_index = 0;
  bool blowup = false;
  bool converged = true;
  std::string diagnostic;
  double initial_window = 0.0;
  double gamma_prime = 0.0;

  /// Per-time value table and JSON manifest of the run.
  void write_csv(std::ostream& os) const;
  nlohmann::json manifest() const;
};

/// Checks sigma < gamma' < gamma, delta < 1 and the problem's grids; throws InvalidArgument naming the constraint.
void validate(const RpdeProblem& problem, const SolveParams& params);

/// One Picard step on the window [first, first + cp.points() - 1]: returns
/// (S x + int S N(y) dr + int S F(y) dX, F(y)). The drift uses the cellwise trapezoid rule
/// with the propagator.
ControlledPath solution_map(const RpdeProblem& problem, const GalerkinVector& x, const ControlledPath& cp);

/// Window-by-window Picard iteration up to the driver horizon or blow-up.
Solution picard_solve(const RpdeProblem& problem, const SolveParams& params = {});

/// Weak formulation defect per grid time against the test field phi.
std::vector<double> weak_residual(const RpdeProblem& problem, const Solution& solution, const GalerkinVector& phi);

struct StabilityRow {
  double epsilon = 0.0;
  double input_distance = 0.0;  // |eps h|_alpha + rho_gamma(X, X~)
  double output_distance = 0.0;
  double ratio = 0.0;
};

struct StabilityReport {
  std::vector<StabilityRow> rows;
  double slope = 0.0;
  double spread = 0.0;  // max/min ratio
};

/// Sweeps perturbations (x + eps h, X~_eps) and measures controlled distances of the solutions.
/// `perturbed_driver(eps)` must share the base driver's grid; `propagator` serves every solve.
StabilityReport stability_experiment(const RpdeProblem& problem, const SolveParams& params, const GalerkinVector& h,
                                     const std::function<RoughPathPtr(double)>& perturbed_driver,
                                     const std::vector<double>& epsilons);

/// |u|_{0, alpha+beta, [s,t]} s^beta / (|u|_{0, alpha, [0,t]} + c).
double smoothing_probe(const Solution& solution, double beta, double s, double t, double c = 1.0);

/// Lower bound used by the window policy: min{gamma-gamma', gamma'-sigma, 1-delta, 1-2gamma'}.
double window_exponent(double gamma, double gamma_prime, double sigma, double delta);

}  // namespace roughevo
