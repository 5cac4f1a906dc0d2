#include <doctest.h>

#include <cmath>

#include "roughevo/controlled.hpp"
#include "roughevo/convolution.hpp"
#include "roughevo/propagator.hpp"

using namespace roughevo;

namespace {

RoughPathPtr time_path(const Partition& grid) {
  return std::make_shared<RoughPath>(lift_smooth([](double t) { return Eigen::VectorXd::Constant(1, t); }, grid, 2));
}

ControlledPath constant_integrand(const RoughPathPtr& x, const ScalePtr& s, const CVector& value) {
  std::vector<CVector> y(x->grid().size(), value);
  return ControlledPath::without_derivative(x, s, 0, y, 0.0, 0.5);
}

}  // namespace

TEST_CASE("controlled path of the driver itself has zero remainder") {
  const Partition grid = Partition::dyadic(0.0, 1.0, 5);
  const auto x = std::make_shared<RoughPath>(sample_bm_lift(1, grid, 3, Convention::Ito));
  const ScalePtr s = SpectralScale::flat(1);
  std::vector<CVector> y;
  std::vector<std::vector<CVector>> yp;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    y.push_back(CVector::Constant(1, x->value(i, 0)));
    yp.push_back({CVector::Constant(1, 1.0)});
  }
  const ControlledPath cp(x, s, 0, y, yp, 0.0, 0.45);
  CHECK(cp.remainder(2, 17).norm() < 1e-14);
  const RemainderReport r = remainder(cp);
  CHECK(r.gamma_level.value < 1e-12);
  CHECK(controlled_distance(cp, cp, 0.4) == 0.0);
  CHECK(controlled_norm(cp) > 0.0);
}

TEST_CASE("composition carries the chain rule derivative") {
  const Partition grid = Partition::dyadic(0.0, 1.0, 3);
  const auto x = time_path(grid);
  const ScalePtr s = SpectralScale::torus(1, 2);
  const CVector v = GalerkinVector::mode(s, {1, 0}, 2.0).coefficients();
  std::vector<CVector> y(grid.size(), v);
  std::vector<std::vector<CVector>> yp(grid.size(), std::vector<CVector>{v});
  const ControlledPath cp(x, s, 0, y, yp, 1.0, 0.5);
  const auto f = MultiplierNonlinearity::fractional(s, 3.0, 0.5);
  const ControlledPath fy = compose(cp, *f);
  CHECK(fy.alpha() == doctest::Approx(0.5));
  CHECK(std::abs(fy.y(0)[s->index_of({1, 0})] - 6.0) < 1e-14);
  CHECK(std::abs(fy.yprime(0, 0)[s->index_of({1, 0})] - 6.0) < 1e-14);
}

TEST_CASE("heat convolution of a constant against X_t = t") {
  const ScalePtr s = SpectralScale::flat(1);
  const Partition grid = Partition::dyadic(0.0, 1.0, 6);
  const auto x = time_path(grid);
  const Propagator p = build_propagator(OperatorFamily::constant(s, LinearOp::diagonal(CVector::Constant(1, -1.0))), grid);
  const ControlledPath z = rough_convolve(p, constant_integrand(x, s, CVector::Constant(1, 1.0)));
  CHECK(std::abs(z.y(grid.cells())[0] - (1.0 - std::exp(-1.0))) < grid.mesh());
  const auto sewn = rough_convolve_sewn(p, Integrand{constant_integrand(x, s, CVector::Constant(1, 1.0))}, 0, grid.cells());
  CHECK(std::abs(sewn.value.shift[0] - z.y(grid.cells())[0]) < 1e-12);
}

TEST_CASE("drift convolution of e^{-r} under the heat semigroup") {
  const ScalePtr s = SpectralScale::torus(1, 1);
  const Partition grid = Partition::dyadic(0.0, 1.0, 6);
  const Propagator p = build_propagator(heat_family(s, [](double) { return 1.0; }), grid);
  std::vector<CVector> u;
  for (double t : grid.points()) u.push_back(GalerkinVector::mode(s, {1, 0}, std::exp(-t)).coefficients());
  const auto id = std::make_shared<MultiplierNonlinearity>(s, CVector::Ones(3), 0.0, "identity");
  const DriftResult r = drift_convolve(p, *id, u, 0, grid.cells());
  CHECK(std::abs(r.value[s->index_of({1, 0})] - std::exp(-1.0)) < 1e-8);
}

TEST_CASE("Ito square identity under the identity propagator") {
  const ScalePtr s = SpectralScale::flat(1);
  const Partition grid = Partition::dyadic(0.0, 1.0, 8);
  const auto b = std::make_shared<RoughPath>(sample_bm_lift(1, grid, 42, Convention::Ito));
  const Propagator id = build_propagator(OperatorFamily::constant(s, LinearOp::zero(1)), grid);
  std::vector<CVector> y;
  std::vector<std::vector<CVector>> yp;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    y.push_back(CVector::Constant(1, b->value(i, 0) - b->value(0, 0)));
    yp.push_back({CVector::Constant(1, 1.0)});
  }
  const ControlledPath z = rough_convolve(id, ControlledPath(b, s, 0, y, yp, 0.0, 0.45));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double bt = b->increment(0, i, 0);
    CHECK(std::abs(z.y(i)[0].real() - 0.5 * (bt * bt - grid[i])) <= 1e-12);
  }
}

TEST_CASE("plain rough integral of X dX is X^2/2 for a geometric lift") {
  const Partition grid = Partition::dyadic(0.0, 1.0, 5);
  const RoughPath x = lift_smooth([](double t) { return Eigen::VectorXd::Constant(1, std::sin(3.0 * t)); }, grid, 8);
  ScalarIntegrand y;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    y.y.push_back(Eigen::VectorXcd::Constant(1, x.value(i, 0)));
    y.yprime.push_back(CMatrix::Constant(1, 1, 1.0));
  }
  const auto r = plain_rough_integral(x, y);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(std::abs(r[i] - 0.5 * x.value(i, 0) * x.value(i, 0)) < 1e-12);
}

TEST_CASE("property: rough convolution is linear and time additive") {
  const ScalePtr s = SpectralScale::torus(1, 3);
  const auto n = static_cast<Eigen::Index>(s->size());
  const Partition grid = Partition::dyadic(0.0, 1.0, 5);
  const auto x = std::make_shared<RoughPath>(
      lift_smooth([](double t) { return Eigen::VectorXd::Constant(1, std::cos(4.0 * t)); }, grid, 4, 0.45));
  const Propagator p = build_propagator(heat_family(s, [](double t) { return 1.0 + t; }), grid);
  std::vector<CVector> y1, y2, ys;
  std::vector<std::vector<CVector>> p1, p2, ps;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    y1.push_back(CVector::Random(n));
    y2.push_back(CVector::Random(n));
    p1.push_back({CVector::Random(n)});
    p2.push_back({CVector::Random(n)});
    ys.push_back(y1.back() - 2.5 * y2.back());
    ps.push_back({p1.back()[0] - 2.5 * p2.back()[0]});
  }
  const ControlledPath a(x, s, 0, y1, p1, 0.0, 0.45), b(x, s, 0, y2, p2, 0.0, 0.45), c(x, s, 0, ys, ps, 0.0, 0.45);
  const ControlledPath za = rough_convolve(p, a), zb = rough_convolve(p, b), zc = rough_convolve(p, c);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK((zc.y(i) - za.y(i) + 2.5 * zb.y(i)).norm() < 1e-12);
  const std::size_t u = 11;
  const ControlledPath tail(x, s, u, std::vector<CVector>(y1.begin() + u, y1.end()),
                            std::vector<std::vector<CVector>>(p1.begin() + u, p1.end()), 0.0, 0.45);
  const ControlledPath zt = rough_convolve(p, tail);
  for (std::size_t j = u; j < grid.size(); ++j)
    CHECK((za.y(j) - p.between(u, j).apply(za.y(u)) - zt.y(j - u)).norm() < 1e-12);
}

TEST_CASE("local expansion defect is small for a smooth driver") {
  const ScalePtr s = SpectralScale::torus(1, 2);
  const Partition grid = Partition::dyadic(0.0, 0.125, 6);
  const auto x = std::make_shared<RoughPath>(
      lift_smooth([](double t) { return Eigen::VectorXd::Constant(1, std::sin(2.0 * M_PI * t)); }, grid, 8, 0.45));
  const Propagator p = build_propagator(heat_family(s, [](double) { return 1.0; }), grid);
  const CVector a = CVector::Ones(static_cast<Eigen::Index>(s->size()));
  std::vector<CVector> y;
  std::vector<std::vector<CVector>> yp;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    y.push_back(p.between(0, i).apply(a) + x->increment(0, i, 0) * a);
    yp.push_back({a});
  }
  const ControlledPath cp(x, s, 0, y, yp, 0.0, 0.45);
  const ControlledPath z = rough_convolve(p, cp);
  const LocalExpansion r = local_expansion(p, Integrand{cp}, z, 0.0);
  CHECK(r.slope >= 3 * 0.45 - 0.15);
}
