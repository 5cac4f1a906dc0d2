#include <doctest.h>

#include <cmath>
#include <sstream>

#include "roughevo/roughpath.hpp"

using namespace roughevo;

namespace {

Eigen::VectorXd curve(double t) {
  Eigen::VectorXd v(2);
  v << t, t * t;
  return v;
}

}  // namespace

TEST_CASE("smooth lift of (t, t^2) has the iterated integrals 2/3 and 1/3") {
  const Partition grid = Partition::dyadic(0.0, 1.0, 4);
  const RoughPath x = lift_smooth(curve, grid, 8);
  CHECK(x.dimension() == 2);
  CHECK(x.increment(0, grid.cells(), 1) == doctest::Approx(1.0));
  CHECK(x.second(0, grid.cells(), 0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(x.second(0, grid.cells(), 1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(x.second(0, grid.cells(), 0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  // XX_{1, 1/2} by direct integration: int_{1/2}^1 (r - 1/2) 2r dr = 5/24.
  CHECK(x.second(grid.cells() / 2, grid.cells(), 0, 1) == doctest::Approx(5.0 / 24.0).epsilon(1e-12));
}

TEST_CASE("lifts satisfy Chen and are geometric") {
  const Partition grid = Partition::dyadic(0.0, 1.0, 6);
  const RoughPath smooth = lift_smooth(curve, grid, 64);
  CHECK(chen_residual(smooth) <= 1e-12);
  CHECK(geometric_defect(smooth) <= 1e-12);
  std::vector<Eigen::VectorXd> samples;
  for (std::size_t i = 0; i < grid.size(); ++i) samples.push_back(Eigen::Vector3d(std::sin(7.0 * i), std::cos(3.0 * i), i % 3));
  const RoughPath pl = lift_piecewise_linear(grid, samples);
  CHECK(chen_residual(pl) <= 1e-12);
  CHECK(geometric_defect(pl) <= 1e-12);
}

TEST_CASE("chen_residual detects a non-multiplicative second level") {
  const Partition grid = Partition::dyadic(0.0, 1.0, 3);
  std::vector<Eigen::VectorXd> values;
  for (double t : grid.points()) values.push_back(Eigen::VectorXd::Constant(1, t));
  const RoughPath bad = RoughPath::from_pair_function(
      grid, values, [&](std::size_t i, std::size_t j) { return Eigen::MatrixXd::Constant(1, 1, grid[j] - grid[i]); },
      0.5);
  CHECK(chen_residual(bad) > 0.1);
}

TEST_CASE("Ito and Stratonovich Brownian lifts") {
  const Partition grid = Partition::dyadic(0.0, 1.0, 5);
  const RoughPath ito = sample_bm_lift(2, grid, 42, Convention::Ito, 4);
  const RoughPath strat = sample_bm_lift(2, grid, 42, Convention::Stratonovich, 4);
  CHECK(ito.spec().kind == LiftKind::BrownianIto);
  CHECK(chen_residual(ito) <= 1e-12);
  CHECK(geometric_defect(strat) <= 1e-12);
  for (std::size_t i = 0; i < grid.size(); i += 5)
    for (std::size_t j = i + 1; j < grid.size(); j += 3) {
      const double dt = grid[j] - grid[i];
      const double db = ito.increment(i, j, 0);
      CHECK(ito.second(i, j, 0, 0) == doctest::Approx((db * db - dt) / 2.0).epsilon(1e-12));
      CHECK(strat.second(i, j, 0, 1) - ito.second(i, j, 0, 1) == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(strat.second(i, j, 1, 1) - ito.second(i, j, 1, 1) == doctest::Approx(dt / 2.0).epsilon(1e-12));
    }
}

TEST_CASE("Brownian samples are reproducible for a fixed seed") {
  const Partition grid = Partition::dyadic(0.0, 1.0, 4);
  const RoughPath a = sample_bm_lift(1, grid, 7, Convention::Ito);
  const RoughPath b = sample_bm_lift(1, grid, 7, Convention::Ito);
  const RoughPath c = sample_bm_lift(1, grid, 8, Convention::Ito);
  CHECK(rough_distance(a, b, 0.45) == 0.0);
  CHECK(rough_distance(a, c, 0.45) > 0.0);
}

TEST_CASE("fbm covariance reduces to min(s, t) for H = 1/2") {
  CHECK(fbm_covariance(0.5, 0.3, 0.7) == doctest::Approx(0.3));
  CHECK(fbm_covariance(0.75, 1.0, 1.0) == doctest::Approx(1.0));
  const RoughPath f = sample_fbm_lift(0.4, Partition::dyadic(0.0, 1.0, 4), 1);
  CHECK(f.gamma() > 1.0 / 3.0);
  CHECK(f.gamma() < 0.4);
  CHECK(chen_residual(f) <= 1e-12);
}

TEST_CASE("dilation scales the levels by c and c^2") {
  const Partition grid = Partition::dyadic(0.0, 1.0, 3);
  const RoughPath x = lift_smooth(curve, grid, 4);
  const RoughPath y = x.scaled(3.0);
  CHECK(y.increment(1, 5, 1) == doctest::Approx(3.0 * x.increment(1, 5, 1)));
  CHECK(y.second(1, 5, 0, 1) == doctest::Approx(9.0 * x.second(1, 5, 0, 1)));
  CHECK(rough_norm(x, 0.5) > 0.0);
}

TEST_CASE("rough path CSV round trip") {
  const RoughPath x = lift_smooth(curve, Partition::dyadic(0.0, 1.0, 3), 4, 0.45);
  std::stringstream ss;
  write_roughpath_csv(ss, x);
  const RoughPath y = read_roughpath_csv(ss);
  CHECK(y.grid().same_as(x.grid()));
  CHECK(rough_distance(x, y, 0.45) <= 1e-15);
}
