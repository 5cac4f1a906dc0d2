#include <doctest.h>

#include <cmath>
#include <sstream>

#include "roughevo/rpde_solver.hpp"

using namespace roughevo;

namespace {

RoughPathPtr sine_driver(const Partition& grid, double frequency, double gamma) {
  return std::make_shared<RoughPath>(
      lift_smooth([frequency](double t) { return Eigen::VectorXd::Constant(1, std::sin(frequency * t)); }, grid, 4, gamma));
}

OperatorFamily scalar_family(double lambda) {
  return OperatorFamily::constant(SpectralScale::flat(1), LinearOp::diagonal(CVector::Constant(1, lambda)));
}

NonlinearityPtr scalar_multiplier(double c) {
  return std::make_shared<MultiplierNonlinearity>(SpectralScale::flat(1), CVector::Constant(1, c), 0.0, "c u");
}

}  // namespace

TEST_CASE("scalar linear equation against exp(-t + sin t)") {
  const Partition grid = Partition::dyadic(0.0, 1.0, 10);
  const Propagator p = build_propagator(scalar_family(-1.0), grid);
  const RpdeProblem problem{&p, nullptr, {scalar_multiplier(1.0)}, GalerkinVector(SpectralScale::flat(1), CVector::Ones(1)),
                            sine_driver(grid, 1.0, 0.5)};
  const Solution sol = picard_solve(problem);
  REQUIRE(sol.converged);
  CHECK(sol.tau == 1.0);
  CHECK(std::abs(sol.u.y(grid.cells())[0] - 0.853402) < 1e-4);
  CHECK(std::abs(sol.u.y(grid.cells())[0] - std::exp(-1.0 + std::sin(1.0))) < 1e-6);
  for (const auto& w : sol.windows) CHECK(w.residual <= 1e-8);
}

TEST_CASE("zero data give the zero solution and zero weak residual") {
  const ScalePtr s = SpectralScale::torus(1, 4);
  const Partition grid = Partition::dyadic(0.0, 1.0, 6);
  const Propagator p = build_propagator(heat_family(s, [](double) { return 1.0; }), grid);
  const RpdeProblem problem{&p, PolynomialNonlinearity::constant(s, {0, 1, 0, -1}),
                            {PolynomialNonlinearity::constant(s, {0, 0.5})}, GalerkinVector(s), sine_driver(grid, 3.0, 0.45)};
  const Solution sol = picard_solve(problem);
  for (std::size_t i = 0; i < sol.u.points(); ++i) CHECK(sol.u.y(i).norm() == 0.0);
  const auto r = weak_residual(problem, sol, GalerkinVector::mode(s, {1, 0}));
  for (double v : r) CHECK(v == 0.0);
}

TEST_CASE("modes decouple for diagonal data") {
  const ScalePtr s = SpectralScale::torus(1, 4);
  const Partition grid = Partition::dyadic(0.0, 1.0, 7);
  const Propagator p = build_propagator(heat_family(s, [](double) { return 1.0; }), grid);
  const RpdeProblem problem{&p, nullptr, {MultiplierNonlinearity::fractional(s, 1.0, 0.3)},
                            GalerkinVector::mode(s, {2, 0}, 0.5), sine_driver(grid, 2.0 * M_PI, 0.45)};
  const Solution sol = picard_solve(problem);
  REQUIRE(sol.converged);
  const std::size_t k = s->index_of({2, 0});
  for (std::size_t i = 0; i < sol.u.points(); ++i) {
    for (std::size_t m = 0; m < s->size(); ++m)
      if (m != k) CHECK(sol.u.y(i)[static_cast<Eigen::Index>(m)] == Complex(0.0));
    const double t = sol.u.time(i);
    const double exact = 0.5 * std::exp(-4.0 * t + std::pow(4.0, 0.3) * std::sin(2.0 * M_PI * t));
    CHECK(std::abs(sol.u.y(i)[static_cast<Eigen::Index>(k)] - exact) <= 2e-3 * exact);
  }
}

TEST_CASE("real initial data stay real under real nonlinearities") {
  const ScalePtr s = SpectralScale::torus(1, 6);
  const Partition grid = Partition::dyadic(0.0, 0.5, 6);
  const Propagator p = build_propagator(heat_family(s, [](double t) { return 1.0 + t; }), grid);
  GalerkinVector x(s);
  x[s->index_of({1, 0})] = Complex(0.3, 0.1);
  x[s->index_of({-1, 0})] = Complex(0.3, -0.1);
  const RpdeProblem problem{&p, PolynomialNonlinearity::constant(s, {0, 1, 0, -1}),
                            {PolynomialNonlinearity::constant(s, {0, 0.5, 0, -0.2})}, x, sine_driver(grid, 5.0, 0.45)};
  const Solution sol = picard_solve(problem);
  REQUIRE(sol.converged);
  for (std::size_t i = 0; i < sol.u.points(); ++i) CHECK(conjugate_symmetry_defect(sol.u.value(i)) < 1e-13);
}

TEST_CASE("validation names the violated constraint") {
  const ScalePtr s = SpectralScale::torus(1, 2);
  const Partition grid = Partition::dyadic(0.0, 1.0, 4);
  const Propagator p = build_propagator(heat_family(s, [](double) { return 1.0; }), grid);
  RpdeProblem problem{&p, nullptr, {MultiplierNonlinearity::fractional(s, 1.0, 0.5)}, GalerkinVector::mode(s, {0, 0}),
                      sine_driver(grid, 1.0, 0.45)};
  try {
    validate(problem, {});
    FAIL("expected a subcriticality error");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("subcriticality") != std::string::npos);
  }
  problem.diffusion = {MultiplierNonlinearity::fractional(s, 1.0, 0.1)};
  CHECK_NOTHROW(validate(problem, {}));
  problem.drift = MultiplierNonlinearity::fractional(s, 1.0, 1.0);
  CHECK_THROWS_AS(validate(problem, {}), InvalidArgument);
  problem.drift = nullptr;
  problem.diffusion.push_back(problem.diffusion.front());
  CHECK_THROWS_AS(validate(problem, {}), InvalidArgument);
}

TEST_CASE("window exponent is the smallest gap") {
  CHECK(window_exponent(0.45, 0.4, 0.3, 0.0) == doctest::Approx(0.05));
  CHECK(window_exponent(0.45, 0.44, 0.0, 0.9) == doctest::Approx(0.01));
  CHECK(window_exponent(0.5, 0.45, 0.0, 0.0) == doctest::Approx(0.05));
}

TEST_CASE("blow-up truncates the solution") {
  const Partition grid = Partition::dyadic(0.0, 1.0, 8);
  const Propagator p = build_propagator(scalar_family(5.0), grid);
  const RpdeProblem problem{&p, nullptr, {scalar_multiplier(0.1)}, GalerkinVector(SpectralScale::flat(1), CVector::Ones(1)),
                            sine_driver(grid, 1.0, 0.5)};
  SolveParams params;
  params.blowup = 10.0;
  const Solution sol = picard_solve(problem, params);
  CHECK(sol.blowup);
  // e^{5t + 0.1 sin t} = 10 near t = 0.455.
  CHECK(sol.tau == doctest::Approx(0.455).epsilon(0.02));
  CHECK(sol.u.points() == sol.last_index + 1);
}

TEST_CASE("stability sweep: zero perturbation gives zero distance, slope one") {
  const Partition grid = Partition::dyadic(0.0, 1.0, 6);
  const Propagator p = build_propagator(scalar_family(-1.0), grid);
  const ScalePtr s = SpectralScale::flat(1);
  const RpdeProblem problem{&p, nullptr, {scalar_multiplier(0.5)}, GalerkinVector(s, CVector::Ones(1)),
                            sine_driver(grid, 2.0, 0.45)};
  const StabilityReport zero = stability_experiment(problem, {}, GalerkinVector(s, CVector::Ones(1)), {}, {0.0});
  CHECK(zero.rows.front().output_distance == 0.0);
  const StabilityReport r =
      stability_experiment(problem, {}, GalerkinVector(s, CVector::Ones(1)), {}, {1e-3, 1e-2, 1e-1});
  CHECK(r.slope == doctest::Approx(1.0).epsilon(0.1));
  CHECK(r.spread <= 3.0);
}

TEST_CASE("solution export") {
  const Partition grid = Partition::dyadic(0.0, 1.0, 4);
  const Propagator p = build_propagator(scalar_family(-1.0), grid);
  const RpdeProblem problem{&p, nullptr, {scalar_multiplier(1.0)}, GalerkinVector(SpectralScale::flat(1), CVector::Ones(1)),
                            sine_driver(grid, 1.0, 0.5)};
  const Solution sol = picard_solve(problem);
  std::ostringstream os;
  sol.write_csv(os);
  CHECK(os.str().rfind("t,k1,re,im\n", 0) == 0);
  const auto m = sol.manifest();
  CHECK(m.at("tau") == 1.0);
  CHECK(m.at("windows").is_array());
  CHECK(smoothing_probe(sol, 0.0, 0.5, 1.0) <= 1.0);
}
