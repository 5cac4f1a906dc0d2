#include <doctest.h>

#include <cmath>
#include <random>

#include "roughevo/linear_op.hpp"
#include "roughevo/spectral_scale.hpp"

using namespace roughevo;

namespace {

GalerkinVector random_real_field(const ScalePtr& scale, std::mt19937_64& rng, double decay = 1.0) {
  std::normal_distribution<double> normal;
  GalerkinVector v(scale);
  for (std::size_t i = 0; i < scale->size(); ++i) {
    const Mode k = scale->mode(i);
    const std::size_t j = scale->index_of({-k[0], -k[1]});
    if (j < i) continue;
    const double w = std::pow(1.0 + scale->symbol(i), -decay);
    const Complex c = j == i ? Complex(normal(rng) * w, 0.0) : Complex(normal(rng), normal(rng)) * w;
    v[i] = c;
    v[j] = std::conj(c);
  }
  return v;
}

}  // namespace

TEST_CASE("torus scale modes and weights") {
  const ScalePtr s = SpectralScale::torus(1, 3);
  CHECK(s->size() == 7);
  const std::size_t i = s->index_of({2, 0});
  REQUIRE(i != SpectralScale::npos);
  CHECK(s->symbol(i) == 4.0);
  CHECK(s->weight(i, 0.5) == doctest::Approx(std::sqrt(5.0)));
  CHECK(s->index_of({4, 0}) == SpectralScale::npos);
  const ScalePtr s2 = SpectralScale::torus(2, 2, 1.0);
  CHECK(s2->size() == 25);
  CHECK(s2->weight(s2->index_of({1, 1}), 0.0) == doctest::Approx(std::sqrt(3.0)));
  CHECK(SpectralScale::flat(3)->is_flat());
}

TEST_CASE("weighted norm of a single mode") {
  const ScalePtr s = SpectralScale::torus(1, 4);
  const GalerkinVector e2 = GalerkinVector::mode(s, {2, 0}, 3.0);
  CHECK(norm_beta(e2, 0.0) == doctest::Approx(3.0));
  CHECK(norm_beta(e2, 1.0) == doctest::Approx(15.0));
}

TEST_CASE("property: interpolation inequality on random fields") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const ScalePtr s = SpectralScale::torus(1, 8);
  for (int k = 0; k < 100; ++k) {
    const GalerkinVector v = random_real_field(s, rng, unit(rng));
    const double a = -1.0 + unit(rng), b = a + 0.01 + unit(rng), g = b + 0.01 + unit(rng);
    CHECK(interpolation_check(v, a, b, g) <= 1e-12);
  }
  CHECK_THROWS_AS(interpolation_check(GalerkinVector::mode(s, {1, 0}), 1.0, 0.5, 2.0), InvalidArgument);
}

TEST_CASE("fractional Laplacian symbols") {
  const ScalePtr s = SpectralScale::torus(1, 4);
  const GalerkinVector v = GalerkinVector::mode(s, {2, 0}) + GalerkinVector::mode(s, {0, 0});
  const GalerkinVector w = fractional_laplacian(v, 0.5);
  CHECK(std::abs(w.at({2, 0}) - 2.0) < 1e-14);
  CHECK(std::abs(w.at({0, 0})) == 0.0);
  const GalerkinVector id = fractional_laplacian(v, 0.0);
  CHECK((id.coefficients() - v.coefficients()).norm() < 1e-15);
}

TEST_CASE("real fields have conjugate-symmetric coefficients") {
  std::mt19937_64 rng(2);
  const ScalePtr s = SpectralScale::torus(1, 6);
  const GalerkinVector v = random_real_field(s, rng);
  CHECK(conjugate_symmetry_defect(v) == 0.0);
  const CVector phys = to_physical(v, 32);
  CHECK(phys.imag().cwiseAbs().maxCoeff() < 1e-13);
  const GalerkinVector back = from_physical(s, phys, 32);
  CHECK((back.coefficients() - v.coefficients()).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(conjugate_symmetry_defect(GalerkinVector::mode(s, {1, 0}, Complex(0, 1))) == doctest::Approx(1.0));
}

TEST_CASE("pairing is the Parseval sum") {
  const ScalePtr s = SpectralScale::torus(1, 3);
  const GalerkinVector u = GalerkinVector::mode(s, {1, 0}, 2.0) + GalerkinVector::mode(s, {-1, 0}, 2.0);
  const GalerkinVector phi = GalerkinVector::mode(s, {1, 0}, Complex(0, 1));
  CHECK(std::abs(pairing(u, phi) - Complex(0, -2)) < 1e-15);
}

TEST_CASE("polynomial nonlinearity against pointwise evaluation") {
  std::mt19937_64 rng(4);
  const ScalePtr s = SpectralScale::torus(1, 5);
  const GalerkinVector v = random_real_field(s, rng, 1.5);
  const auto p = PolynomialNonlinearity::constant(s, {0.5, 1.0, 0.0, -1.0});
  // Oracle: direct sum u(x) = sum_k c_k e^{ikx} on a fine grid, cubic applied pointwise, projected by quadrature.
  const int m = 64;
  std::vector<Complex> values(m);
  for (int j = 0; j < m; ++j) {
    const double x = 2.0 * M_PI * j / m;
    Complex u = 0.0;
    for (std::size_t i = 0; i < s->size(); ++i) u += v[i] * std::exp(Complex(0, s->mode(i)[0] * x));
    values[j] = 0.5 + u - u * u * u;
  }
  const GalerkinVector out = p->apply(v);
  for (std::size_t i = 0; i < s->size(); ++i) {
    Complex c = 0.0;
    for (int j = 0; j < m; ++j) c += values[j] * std::exp(Complex(0, -s->mode(i)[0] * 2.0 * M_PI * j / m));
    CHECK(std::abs(out[i] - c / double(m)) < 1e-12);
  }
  CHECK(p->degree() == 3);
}

TEST_CASE("polynomial derivative matches a central difference") {
  std::mt19937_64 rng(8);
  const ScalePtr s = SpectralScale::torus(1, 4);
  const GalerkinVector v = random_real_field(s, rng), h = random_real_field(s, rng);
  const auto p = PolynomialNonlinearity::constant(s, {0.0, 0.5, 0.0, -0.2});
  const double eps = 1e-5;
  const GalerkinVector fd = (1.0 / (2.0 * eps)) * (p->apply(v + eps * h) - p->apply(v - eps * h));
  CHECK((p->derivative(v, h).coefficients() - fd.coefficients()).cwiseAbs().maxCoeff() < 1e-8);
  const PolynomialJacobian jac = jacobian_polynomial(*p, v);
  CHECK((jac(h).coefficients() - p->derivative(v, h).coefficients()).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("multiplier nonlinearity") {
  const ScalePtr s = SpectralScale::torus(1, 3);
  const auto f = MultiplierNonlinearity::fractional(s, 2.0, 0.25);
  CHECK(f->shift() == 0.25);
  const GalerkinVector v = GalerkinVector::mode(s, {3, 0});
  CHECK(std::abs(f->apply(v).at({3, 0}) - 2.0 * std::pow(9.0, 0.25)) < 1e-14);
  CHECK(ZeroNonlinearity(s).is_zero());
}

TEST_CASE("matrix exponential") {
  CMatrix n(2, 2);
  n << 0, 1, 0, 0;
  CMatrix expected(2, 2);
  expected << 1, 1, 0, 1;
  CHECK((expm(n) - expected).cwiseAbs().maxCoeff() < 1e-15);
  // Oracle: Taylor series to 60 terms for a moderate matrix.
  CMatrix a(3, 3);
  a << -1.0, 0.5, 0.2, 0.3, -2.0, 0.1, 0.0, 0.4, -0.5;
  CMatrix term = CMatrix::Identity(3, 3), sum = term;
  for (int k = 1; k < 60; ++k) {
    term = term * a / double(k);
    sum += term;
  }
  CHECK((expm(a) - sum).cwiseAbs().maxCoeff() < 1e-13);
  CMatrix big = 12.0 * a;
  CMatrix half = expm(CMatrix(6.0 * a));
  CHECK((expm(big) - half * half).cwiseAbs().maxCoeff() < 1e-12 * half.norm() * half.norm());
}

TEST_CASE("operator norms of diagonal operators") {
  const ScalePtr s = SpectralScale::torus(1, 2);
  CVector d(5);
  for (std::size_t i = 0; i < 5; ++i) d[static_cast<Eigen::Index>(i)] = 1.0 + s->symbol(i);
  const LinearOp op = LinearOp::diagonal(d);
  CHECK(operator_norm(op, *s, 0.0) == doctest::Approx(5.0));
  CHECK(max_entry(op) == doctest::Approx(5.0));
  // L(B_1, B_0): |d_k| / (1 + |k|^2).
  CHECK(operator_norm(op, *s, 1.0, 0.0) == doctest::Approx(1.0));
  CHECK(operator_norm(LinearOp::dense(op.to_dense()), *s, 1.0, 0.0) == doctest::Approx(1.0));
}
