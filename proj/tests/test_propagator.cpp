#include <doctest.h>

#include <cmath>

#include "roughevo/propagator.hpp"

using namespace roughevo;

namespace {

CMatrix nilpotent_a() {
  CMatrix a(2, 2);
  a << 0, 1, 0, 0;
  return a;
}

CMatrix nilpotent_b() {
  CMatrix b(2, 2);
  b << 0, 0, 1, 0;
  return b;
}

}  // namespace

TEST_CASE("constant nilpotent generator") {
  const auto fam = OperatorFamily::constant(SpectralScale::flat(2), LinearOp::dense(nilpotent_a()));
  const Propagator p = build_propagator(fam, Partition::dyadic(0.0, 1.0, 2));
  CMatrix expected(2, 2);
  expected << 1, 1, 0, 1;
  CHECK((p.between(0, 4).to_dense() - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("time-dependent heat family against exp(-k^2 int nu)") {
  const ScalePtr s = SpectralScale::torus(1, 4);
  const auto nu = [](double t) { return 1.0 + 0.5 * std::sin(t); };
  const Propagator p = build_propagator(heat_family(s, nu), Partition::dyadic(0.0, 1.0, 4));
  const double integral = 1.0 + 0.5 * (1.0 - std::cos(1.0));
  const LinearOp total = p.between(0, 16);
  for (std::size_t i = 0; i < s->size(); ++i)
    CHECK(std::abs(total.to_dense()(i, i) - std::exp(-s->symbol(i) * integral)) < 1e-10);
  CHECK(p.converged());
}

TEST_CASE("cocycle, restriction and off-grid queries") {
  const ScalePtr s = SpectralScale::torus(1, 3);
  const Propagator p = build_propagator(heat_family(s, [](double t) { return 1.0 + t; }), Partition::dyadic(0.0, 1.0, 4));
  const CMatrix lhs = p.between(0, 16).to_dense();
  const CMatrix rhs = (p.between(5, 16) * p.between(0, 5)).to_dense();
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-14);
  const Propagator coarse = p.restrict_to(Partition::dyadic(0.0, 1.0, 2));
  CHECK(coarse.grid().size() == 5);
  CHECK((coarse.between(1, 3).to_dense() - p.between(4, 12).to_dense()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(p.restrict_to(Partition({0.0, 0.3, 1.0})), InvalidArgument);
  CHECK((p(0.0, 1.0).to_dense() - lhs).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((p(0.25, 0.25).to_dense() - CMatrix::Identity(7, 7)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("dense family against a fine exponential product") {
  const auto fam = OperatorFamily::dense(SpectralScale::flat(2), [](double t) {
    CMatrix m(2, 2);
    m << -1.0, t, 0.5, -2.0 + t;
    return m;
  });
  const Propagator p = build_propagator(fam, Partition::dyadic(0.0, 1.0, 3));
  // Oracle: midpoint exponential products, second order, extrapolated once.
  const auto product = [&](int n) {
    CMatrix acc = CMatrix::Identity(2, 2);
    for (int i = 0; i < n; ++i) {
      const double tm = (i + 0.5) / n;
      CMatrix m(2, 2);
      m << -1.0, tm, 0.5, -2.0 + tm;
      acc = expm(CMatrix(m / double(n))) * acc;
    }
    return acc;
  };
  const CMatrix reference = (4.0 * product(4096) - product(2048)) / 3.0;
  CHECK((p.between(0, 8).to_dense() - reference).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("property report on a heat family") {
  const ScalePtr s = SpectralScale::torus(1, 6);
  const Propagator p = build_propagator(heat_family(s, [](double t) { return 1.0 + 0.5 * t; }), Partition::dyadic(0.0, 1.0, 6));
  const PropertyReport r = verify_properties(p);
  CHECK(r.cocycle_residual <= 1e-10);
  CHECK(r.proximity_spread <= 10.0);
  CHECK(r.smoothing_ratios.size() == 3);
  CHECK(r.derivative_order == doctest::Approx(1.0).epsilon(0.1));
  CHECK(r.to_json().contains("proximity_ratio"));
}

TEST_CASE("heat smoothing ratio stays below the one-mode bound") {
  const ScalePtr s = SpectralScale::torus(1, 1);
  const Propagator p = build_propagator(heat_family(s, [](double) { return 1.0; }), Partition::dyadic(0.0, 1.0, 8));
  const CVector x = GalerkinVector::mode(s, {1, 0}).coefficients();
  const double ratio = smoothing_ratio(p, 0.5, 0.0, x);
  // sup_tau tau^{1/2} e^{-tau} sqrt(2) = sqrt(2) e^{-1/2} / sqrt(2) at tau = 1/2.
  CHECK(ratio == doctest::Approx(std::sqrt(0.5) * std::exp(-0.5) * std::sqrt(2.0)).epsilon(1e-6));
  CHECK(ratio <= 0.61);
  CHECK(heat_smoothing_oracle(*s, 0.5, 1.0) >= ratio - 1e-12);
}

TEST_CASE("splitting of the nilpotent pair") {
  const ScalePtr s = SpectralScale::flat(2);
  const auto a = OperatorFamily::constant(s, LinearOp::dense(nilpotent_a()));
  const auto b = OperatorFamily::constant(s, LinearOp::dense(nilpotent_b()));
  const SplitResult one = lie_trotter(a, b, 0.0, 1.0, 1);
  CHECK(std::abs(one.difference(0, 0)) == doctest::Approx(2.0 - std::cosh(1.0)).epsilon(1e-10));
  CHECK(one.max_entry_error == doctest::Approx(std::cosh(1.0) - 1.0).epsilon(1e-10));
  const double e16 = strang(a, b, 0.0, 1.0, 16).max_entry_error;
  const double e32 = strang(a, b, 0.0, 1.0, 32).max_entry_error;
  CHECK(e16 / e32 == doctest::Approx(4.0).epsilon(0.05));
  const CommutatorProbe probe = commutator_probe(a, b, 0.0, 0.0, {0.1, 0.01, 0.001});
  CHECK(probe.spread < 1.2);
}
