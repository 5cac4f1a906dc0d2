#include <doctest.h>

#include <cmath>
#include <random>

#include "roughevo/convergence.hpp"
#include "roughevo/timebase.hpp"

using namespace roughevo;

TEST_CASE("dyadic partition has 2^level cells and exact endpoints") {
  const Partition p = Partition::dyadic(0.0, 1.0, 3);
  CHECK(p.size() == 9);
  CHECK(p.cells() == 8);
  CHECK(p.front() == 0.0);
  CHECK(p.back() == 1.0);
  CHECK(p.mesh() == doctest::Approx(0.125));
  CHECK(p.find(0.375) == 3);
  CHECK(p.find(0.3) == Partition::npos);
  CHECK(p.floor_index(0.3) == 2);
  CHECK(make_dyadic_partition(0.0, 2.0, 1).same_as(Partition({0.0, 1.0, 2.0})));
}

TEST_CASE("partition rejects degenerate input") {
  CHECK_THROWS_AS(Partition({0.0}), InvalidArgument);
  CHECK_THROWS_AS(Partition({0.0, 0.5, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(Partition::dyadic(1.0, 1.0, 2), InvalidArgument);
  CHECK_THROWS_AS(Partition::uniform(0.0, 1.0, 0), InvalidArgument);
}

TEST_CASE("slice keeps the chosen points") {
  const Partition p = Partition::uniform(0.0, 1.0, 10);
  const Partition s = p.slice(2, 5);
  CHECK(s.size() == 4);
  CHECK(s.front() == doctest::Approx(0.2));
  CHECK(s.back() == doctest::Approx(0.5));
}

TEST_CASE("linear control is additive") {
  const Control w = control_linear(2.0);
  CHECK(w(0.25, 0.75) == doctest::Approx(1.0));
  CHECK(w(0.5, 0.5) == 0.0);
  CHECK(superadditivity_defect(w, Partition::dyadic(0.0, 1.0, 4)) <= 1e-15);
}

TEST_CASE("p-variation of sqrt(t) with p = 2 on a grid") {
  const Partition grid = Partition::dyadic(0.0, 1.0, 6);
  const auto inc = [&](std::size_t i, std::size_t j) { return std::sqrt(grid[j]) - std::sqrt(grid[i]); };
  const Control w = control_pvar(grid, inc, 2.0);
  // Any partition gives sum (sqrt t_j - sqrt t_i)^2 <= sum (t_j - t_i) = 1, with equality for the trivial one.
  CHECK(w(0.0, 1.0) == doctest::Approx(1.0));
  CHECK(w(0.25, 1.0) >= 0.25 - 1e-12);
}

TEST_CASE("property: sampled controls are superadditive") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  const Partition grid = Partition::dyadic(0.0, 1.0, 4);
  for (int k = 0; k < 20; ++k) {
    std::vector<double> walk{0.0};
    for (std::size_t i = 1; i < grid.size(); ++i) walk.push_back(walk.back() + normal(rng));
    const Control pv = control_pvar(grid, [&](std::size_t i, std::size_t j) { return std::abs(walk[j] - walk[i]); },
                                    1.5 + 0.1 * k);
    const Control lin = control_linear(0.5);
    CHECK(superadditivity_defect(pv, grid) <= 1e-12 * (1.0 + pv(0.0, 1.0)));
    CHECK(superadditivity_defect(control_sum(pv, lin), grid) <= 1e-12 * (1.0 + pv(0.0, 1.0)));
    CHECK(superadditivity_defect(control_product_power(lin, 0.4, pv, 0.6), grid) <= 1e-12 * (1.0 + pv(0.0, 1.0)));
  }
}

TEST_CASE("Hoelder seminorm of t^gamma") {
  const Partition grid = Partition::dyadic(0.0, 1.0, 6);
  std::vector<double> v;
  for (double t : grid.points()) v.push_back(std::sqrt(t));
  const SeminormReport r = holder_seminorm(grid, v, 0.5);
  CHECK(r.value == doctest::Approx(1.0));
  CHECK(r.first == 0);
}

TEST_CASE("fit_order recovers exact orders") {
  const std::vector<double> h{1.0, 0.5, 0.25};
  CHECK(fit_order(h, std::vector<double>{1.0, 0.25, 1.0 / 16}).order == doctest::Approx(2.0));
  const OrderFit linear = fit_order(h, h);
  CHECK(linear.order == doctest::Approx(1.0));
  CHECK(linear.intercept == doctest::Approx(0.0));
  CHECK(linear.residual < 1e-14);
}

TEST_CASE("fit_order on noisy h^1.5") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> noise(-0.01, 0.01);
  std::vector<double> h, e;
  for (int k = 0; k < 8; ++k) {
    h.push_back(std::ldexp(1.0, -k));
    e.push_back(std::pow(h.back(), 1.5) * (1.0 + noise(rng)));
  }
  CHECK(std::abs(fit_order(h, e).order - 1.5) <= 0.05);
}

TEST_CASE("fit_order rejects bad tables") {
  CHECK_THROWS_AS(fit_order(std::vector<double>{1, 0.5}, std::vector<double>{1, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(fit_order(std::vector<double>{1, 0.5, 0.25}, std::vector<double>{1, 0, 0.25}), InvalidArgument);
  ConvergenceTable t;
  t.add(1.0, 1.0);
  t.add(0.5, 0.3);
  t.add(0.25, 0.1);
  CHECK(t.monotone());
  t.add(0.125, 0.2);
  CHECK_FALSE(t.monotone());
}
