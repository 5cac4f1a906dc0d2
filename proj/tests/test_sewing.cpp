#include <doctest.h>

#include <cmath>

#include "roughevo/propagator.hpp"
#include "roughevo/sewing.hpp"

using namespace roughevo;

TEST_CASE("scalar multiplicative sewing of exp(s (t - s))") {
  const ScalarMonoid m;
  const Germ<double> mu = [](double s, double t) { return std::exp(s * (t - s)); };
  SewOptions opt;
  opt.tol = 1e-13;
  opt.max_level = 12;
  opt.extrapolation = 4;
  const auto r = multiplicative_sew(m, mu, control_linear(1.0), 2.0, 0.0, 1.0, opt);
  CHECK(std::abs(r.value - std::exp(0.5)) <= 1e-8);
  CHECK(r.history.size() >= 2);
}

TEST_CASE("raw dyadic residuals decay at first order for z = 2") {
  const ScalarMonoid m;
  const Germ<double> mu = [](double s, double t) { return std::exp(s * (t - s)); };
  const auto r = multiplicative_sew(m, mu, control_linear(1.0), 2.0, 0.0, 1.0, SewOptions{0.0, 10, 0});
  for (std::size_t i = 4; i < r.history.size(); ++i)
    CHECK(r.history[i].plain_residual / r.history[i - 1].plain_residual == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("an exactly multiplicative germ sews at level 0") {
  const ScalarMonoid m;
  const Germ<double> mu = [](double s, double t) { return std::exp(-2.0 * (t - s)); };
  const auto r = multiplicative_sew(m, mu, control_linear(1.0), 2.0, 0.0, 1.0);
  CHECK(r.converged);
  CHECK(r.level == 0);
  CHECK(r.value == doctest::Approx(std::exp(-2.0)));
}

TEST_CASE("partition products follow the time order") {
  const ScalarMonoid m;
  const Germ<double> mu = [](double s, double t) { return 1.0 + s + t; };
  CHECK(partition_product(m, mu, Partition({0.0, 0.5, 1.0})) == doctest::Approx(1.5 * 2.5));
}

TEST_CASE("sewing rejects invalid arguments") {
  const ScalarMonoid m;
  const Germ<double> mu = [](double, double) { return 1.0; };
  CHECK_THROWS_AS(multiplicative_sew(m, mu, control_linear(1.0), 1.0, 0.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(multiplicative_sew(m, mu, control_linear(1.0), 2.0, 1.0, 0.0), InvalidArgument);
}

TEST_CASE("maximal inequality factor 2^z zeta(z)") {
  CHECK(maximal_inequality_factor(2.0) == doctest::Approx(4.0 * M_PI * M_PI / 6.0).epsilon(1e-8));
  const ScalarMonoid m;
  const Germ<double> mu = [](double s, double t) { return std::exp(s * (t - s)); };
  const auto probe = maximal_inequality_probe(m, mu, control_linear(1.0), 2.0, 0.0, 1.0, 8);
  CHECK(probe.ratios.size() == 8);
  CHECK(probe.max_ratio <= maximal_inequality_factor(2.0));
}

TEST_CASE("affine sewing of a heat convolution") {
  const ScalePtr s = SpectralScale::flat(1);
  const VectorGerm xi = [](double a, double b) { return CVector::Constant(1, b - a); };
  const OperatorGerm prop = [](double a, double b) { return LinearOp::diagonal(CVector::Constant(1, std::exp(-(b - a)))); };
  SewOptions opt;
  opt.tol = 1e-12;
  opt.max_level = 14;
  opt.extrapolation = 4;
  const AffineSewResult r = affine_sew(s, xi, prop, 0.45, 0.0, 0.0, 1.0, opt);
  CHECK(std::abs(r.value[0] - (1.0 - std::exp(-1.0))) < 1e-9);
}

TEST_CASE("property: affine monoid laws") {
  const ScalePtr s = SpectralScale::torus(1, 2);
  const AffineMonoid m(s, 0.0);
  const auto n = static_cast<Eigen::Index>(s->size());
  for (int k = 0; k < 10; ++k) {
    const AffineElement a{LinearOp::dense(CMatrix::Random(n, n)), CVector::Random(n)};
    const AffineElement b{LinearOp::dense(CMatrix::Random(n, n)), CVector::Random(n)};
    const AffineElement c{LinearOp::dense(CMatrix::Random(n, n)), CVector::Random(n)};
    CHECK(m.distance(m.compose(m.compose(a, b), c), m.compose(a, m.compose(b, c))) < 1e-12);
    CHECK(m.distance(m.compose(a, m.unit()), a) < 1e-15);
    const AffineElement lhs = m.compose(m.combine(a, 0.3, b, -1.2), c);
    const AffineElement rhs = m.combine(m.compose(a, c), 0.3, m.compose(b, c), -1.2);
    CHECK(m.distance(lhs, rhs) < 1e-12);
    CHECK(m.size(a) >= 1.0);
  }
}
