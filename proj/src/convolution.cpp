#include "roughevo/convolution.hpp"

#include <array>
#include <cmath>

#include "roughevo/convergence.hpp"

namespace roughevo {

namespace {

void check_integrand(const Propagator& s, const Integrand& y) {
  if (y.empty()) throw InvalidArgument("integrand needs one component per driver dimension");
  const auto& first = y.front();
  if (y.size() != first.dimension()) throw InvalidArgument("integrand needs one component per driver dimension");
  for (const auto& c : y) {
    if (c.driver_ptr() != first.driver_ptr() || c.offset() != first.offset() || c.points() != first.points())
      throw InvalidArgument("integrand components must share driver and grid");
    if (!c.scale()->same_as(*first.scale())) throw InvalidArgument("integrand components live on different scales");
  }
  if (!s.grid().same_as(first.driver().grid())) throw InvalidArgument("propagator and driver grids differ");
  if (!s.family().scale()->same_as(*first.scale())) throw InvalidArgument("propagator and integrand scales differ");
}

// phi_1(z) = (e^z - 1)/z and phi_2(z) = (e^z - 1 - z)/z^2.
std::pair<Complex, Complex> phi12(Complex z) {
  if (std::abs(z) < 1e-2) {
    const Complex p1 = 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0 + z * z * z * z / 120.0;
    const Complex p2 = 0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0 + z * z * z * z / 720.0;
    return {p1, p2};
  }
  const Complex em1 = std::exp(z) - 1.0;
  return {em1 / z, (em1 - z) / (z * z)};
}

// h phi_1(hL) and h phi_2(hL) for the generator L at time r.
std::pair<LinearOp, LinearOp> phi_operators(const OperatorFamily& family, double r, double h) {
  const LinearOp l = family.at(r);
  if (l.is_diagonal()) {
    const CVector& d = l.diagonal_entries();
    CVector p1(d.size()), p2(d.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      const auto [a, b] = phi12(h * d[i]);
      p1[i] = h * a;
      p2[i] = h * b;
    }
    return {LinearOp::diagonal(p1), LinearOp::diagonal(p2)};
  }
  const Eigen::Index n = l.matrix().rows();
  CMatrix m = CMatrix::Zero(3 * n, 3 * n);
  m.block(0, 0, n, n) = h * l.matrix();
  m.block(0, n, n, n) = CMatrix::Identity(n, n);
  m.block(n, 2 * n, n, n) = CMatrix::Identity(n, n);
  const CMatrix e = expm(m);
  return {LinearOp::dense(h * e.block(0, n, n, n)), LinearOp::dense(h * e.block(0, 2 * n, n, n))};
}

// Weights of int_{x[lo]}^{x[hi]} of the quadratic through x[a], x[a+1], x[a+2] (2-point Gauss is exact).
std::array<double, 3> quadratic_weights(const std::array<double, 3>& x, double lo, double hi) {
  const double g = 0.5 / std::sqrt(3.0);
  std::array<double, 3> w{0.0, 0.0, 0.0};
  for (double node : {0.5 - g, 0.5 + g}) {
    const double r = lo + (hi - lo) * node;
    for (int i = 0; i < 3; ++i) {
      double l = 1.0;
      for (int j = 0; j < 3; ++j)
        if (j != i) l *= (r - x[j]) / (x[i] - x[j]);
      w[i] += 0.5 * (hi - lo) * l;
    }
  }
  return w;
}

// Composite Simpson on the points idx (indices into grid), odd tails closed by a quadratic on the last cell.
CVector simpson(const Partition& grid, const std::vector<std::size_t>& idx, const std::vector<CVector>& g) {
  const std::size_t m = idx.size() - 1;
  CVector acc = CVector::Zero(g.front().size());
  if (m == 1) return 0.5 * (grid[idx[1]] - grid[idx[0]]) * (g[0] + g[1]);
  const std::size_t paired = m % 2 == 0 ? m : m - 1;
  for (std::size_t k = 0; k + 2 <= paired; k += 2) {
    const std::array<double, 3> x{grid[idx[k]], grid[idx[k + 1]], grid[idx[k + 2]]};
    const auto w = quadratic_weights(x, x[0], x[2]);
    acc += w[0] * g[k] + w[1] * g[k + 1] + w[2] * g[k + 2];
  }
  if (paired < m) {
    const std::array<double, 3> x{grid[idx[m - 2]], grid[idx[m - 1]], grid[idx[m]]};
    const auto w = quadratic_weights(x, x[1], x[2]);
    acc += w[0] * g[m - 2] + w[1] * g[m - 1] + w[2] * g[m];
  }
  return acc;
}

}  // namespace

CVector compensated_germ(const Integrand& y, std::size_t i, std::size_t j) {
  const std::size_t d = y.size();
  const auto& x = y.front().driver();
  const std::size_t off = y.front().offset();
  CVector xi = CVector::Zero(y.front().y(i).size());
  for (std::size_t a = 0; a < d; ++a) {
    xi += y[a].dx(i, j, a) * y[a].y(i);
    for (std::size_t b = 0; b < d; ++b) xi += x.second(off + i, off + j, b, a) * y[a].yprime(i, b);
  }
  return xi;
}

ControlledPath rough_convolve(const Propagator& s, const Integrand& y) {
  check_integrand(s, y);
  const auto& lead = y.front();
  const std::size_t off = lead.offset();
  const auto n = static_cast<Eigen::Index>(lead.scale()->size());
  std::vector<CVector> z{CVector::Zero(n)};
  std::vector<std::vector<CVector>> zp;
  z.reserve(lead.points());
  zp.reserve(lead.points());
  for (std::size_t i = 0; i + 1 < lead.points(); ++i)
    z.push_back(s.cell(off + i).apply(z.back() + compensated_germ(y, i, i + 1)));
  for (std::size_t i = 0; i < lead.points(); ++i) {
    std::vector<CVector> comps;
    for (const auto& c : y) comps.push_back(c.y(i));
    zp.push_back(std::move(comps));
  }
  return ControlledPath(lead.driver_ptr(), lead.scale(), off, std::move(z), std::move(zp), lead.alpha(),
                        lead.gamma());
}

ControlledPath rough_convolve(const Propagator& s, const ControlledPath& y) { return rough_convolve(s, Integrand{y}); }

SewResult<AffineElement> rough_convolve_sewn(const Propagator& s, const Integrand& y, std::size_t first,
                                             std::size_t last) {
  check_integrand(s, y);
  const std::size_t off = y.front().offset();
  const AffineMonoid monoid(y.front().scale(), y.front().alpha() - 2.0 * y.front().gamma());
  const std::function<AffineElement(std::size_t, std::size_t)> mu = [&](std::size_t gi, std::size_t gj) {
    LinearOp op = s.between(gi, gj);
    CVector shift = op.apply(compensated_germ(y, gi - off, gj - off));
    return AffineElement{std::move(op), std::move(shift)};
  };
  return grid_sew(monoid, mu, s.grid(), off + first, off + last);
}

LocalExpansion local_expansion(const Propagator& s, const Integrand& y, const ControlledPath& z, double beta,
                               std::size_t max_points) {
  check_integrand(s, y);
  const auto& lead = y.front();
  const std::size_t off = lead.offset();
  const double gamma = lead.gamma();
  const double level = lead.alpha() - 2.0 * gamma + beta;
  const auto& scale = *lead.scale();
  std::size_t stride = 1;
  while ((lead.points() - 1) / stride + 1 > max_points) stride *= 2;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < lead.points(); i += stride) idx.push_back(i);
  LocalExpansion out;
  for (std::size_t p = 0; p < idx.size(); ++p)
    for (std::size_t q = p + 1; q < idx.size(); ++q) {
      const std::size_t i = idx[p], j = idx[q];
      const LinearOp op = s.between(off + i, off + j);
      const CVector defect = z.y(j) - op.apply(z.y(i) + compensated_germ(y, i, j));
      const double dt = lead.time(j) - lead.time(i);
      const double e = weighted_norm(scale, defect, level);
      out.sup_ratio = std::max(out.sup_ratio, e / std::pow(dt, 3.0 * gamma - beta));
      if (p == 0 && e > 0.0) {
        out.lengths.push_back(dt);
        out.defects.push_back(e);
      }
    }
  out.slope = out.lengths.size() >= 3 ? fit_order(out.lengths, out.defects).order : 0.0;
  return out;
}

DriftResult drift_convolve(const Propagator& s, const Nonlinearity& n, const std::vector<CVector>& u,
                           std::size_t first, std::size_t last) {
  if (first > last || last >= s.grid().size()) throw InvalidArgument("drift window outside the propagator grid");
  if (u.size() != last - first + 1) throw InvalidArgument("drift path does not match the window");
  const auto& scale = s.family().scale();
  DriftResult out;
  out.value = CVector::Zero(static_cast<Eigen::Index>(scale->size()));
  if (first == last || n.is_zero()) {
    out.rule = "none";
    return out;
  }
  std::vector<CVector> nu;
  nu.reserve(u.size());
  for (const auto& v : u) nu.push_back(n.apply(GalerkinVector(scale, v)).coefficients());
  const auto& grid = s.grid();
  const std::size_t m = last - first;

  if (n.shift() <= 0.0) {
    out.rule = "simpson";
    // g_k = S_{last,k} N(u_k), propagated backwards from the end point.
    std::vector<CVector> g(m + 1);
    LinearOp back = LinearOp::identity(scale->size());
    g[m] = nu[m];
    for (std::size_t k = m; k-- > 0;) {
      back = back * s.cell(first + k);
      g[k] = back.apply(nu[k]);
    }
    std::vector<std::size_t> idx(m + 1);
    for (std::size_t k = 0; k <= m; ++k) idx[k] = first + k;
    out.value = simpson(grid, idx, g);
    if (m >= 4) {
      std::vector<std::size_t> coarse;
      std::vector<CVector> gc;
      for (std::size_t k = 0; k <= m; k += 2) {
        coarse.push_back(first + k);
        gc.push_back(g[k]);
      }
      if (coarse.back() != last) {
        coarse.push_back(last);
        gc.push_back(g[m]);
      }
      out.richardson_difference = weighted_norm(*scale, simpson(grid, coarse, gc) - out.value, 0.0);
    }
    return out;
  }

  out.rule = "exponential-phi";
  const auto run = [&](std::size_t step) {
    CVector acc = CVector::Zero(static_cast<Eigen::Index>(scale->size()));
    for (std::size_t k = 0; k < m; k += step) {
      const std::size_t k1 = std::min(k + step, m);
      const double h = grid[first + k1] - grid[first + k];
      const auto [p1, p2] = phi_operators(s.family(), grid[first + k], h);
      acc = s.between(first + k, first + k1).apply(acc) + p2.apply(nu[k1]) + (p1 - p2).apply(nu[k]);
    }
    return acc;
  };
  out.value = run(1);
  if (m >= 4) out.richardson_difference = weighted_norm(*scale, run(2) - out.value, 0.0);
  return out;
}

std::vector<Complex> plain_rough_integral(const RoughPath& x, const ScalarIntegrand& y, std::size_t offset) {
  const std::size_t d = x.dimension();
  if (y.y.size() != y.yprime.size()) throw InvalidArgument("scalar integrand tables differ in length");
  if (offset + y.y.size() > x.grid().size()) throw InvalidArgument("scalar integrand exceeds the driver grid");
  std::vector<Complex> z{Complex(0.0)};
  for (std::size_t i = 0; i + 1 < y.y.size(); ++i) {
    if (static_cast<std::size_t>(y.y[i].size()) != d || static_cast<std::size_t>(y.yprime[i].rows()) != d)
      throw InvalidArgument("scalar integrand does not match the driver dimension");
    Complex acc = z.back();
    for (std::size_t a = 0; a < d; ++a) {
      acc += y.y[i][static_cast<Eigen::Index>(a)] * x.increment(offset + i, offset + i + 1, a);
      for (std::size_t b = 0; b < d; ++b)
        acc += y.yprime[i](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) *
               x.second(offset + i, offset + i + 1, b, a);
    }
    z.push_back(acc);
  }
  return z;
}

}  // namespace roughevo
