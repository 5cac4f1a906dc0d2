#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "roughevo/linear_op.hpp"
#include "roughevo/timebase.hpp"

namespace roughevo {

/// Submultiplicative monoid: compose, unit, metric and size.
template <class M>
concept Monoid = requires(const M& m, const typename M::Element& a, const typename M::Element& b) {
  { m.compose(a, b) } -> std::convertible_to<typename M::Element>;
  { m.unit() } -> std::convertible_to<typename M::Element>;
  { m.distance(a, b) } -> std::convertible_to<double>;
  { m.size(a) } -> std::convertible_to<double>;
};

/// Monoid embedded in a vector space; combine(a, x, b, y) = x a + y b.
template <class M>
concept LinearMonoid = Monoid<M> && requires(const M& m, const typename M::Element& a, double c) {
  { m.combine(a, c, a, c) } -> std::convertible_to<typename M::Element>;
};

/// mu(s, t) returns the germ value mu_{t,s} for s <= t.
template <class E>
using Germ = std::function<E(double, double)>;

/// Ordered product mu_{t_n,t_{n-1}} ... mu_{t_1,t_0}, latest factor leftmost.
template <Monoid M>
typename M::Element partition_product(const M& m, const Germ<typename M::Element>& mu, std::span<const double> points) {
  typename M::Element acc = m.unit();
  for (std::size_t i = 0; i + 1 < points.size(); ++i) acc = m.compose(mu(points[i], points[i + 1]), acc);
  return acc;
}

template <Monoid M>
typename M::Element partition_product(const M& m, const Germ<typename M::Element>& mu, const Partition& pi) {
  return partition_product(m, mu, pi.points());
}

struct SewOptions {
  double tol = 1e-12;
  int max_level = 16;
  /// Richardson columns for linear monoids (0 disables extrapolation).
  int extrapolation = 0;
};

struct SewLevel {
  int level = 0;
  double mesh = 0.0;
  double residual = 0.0;        // distance between consecutive estimates
  double plain_residual = 0.0;  // distance between consecutive raw dyadic products
  double ratio = 0.0;           // residual / previous residual
};

template <class E>
struct SewResult {
  E value;
  int level = 0;
  double residual = 0.0;
  bool converged = false;
  /// max over levels of d(mu_{t,s}, mu^{pi_k}_{t,s}) / omega(s,t)^z.
  double maximal_constant = 0.0;
  std::string diagnostic;
  std::vector<SewLevel> history;
};

void write_sew_history_csv(std::ostream& os, const std::vector<SewLevel>& history);

namespace detail {

inline bool stagnating(const std::vector<SewLevel>& h) {
  if (h.size() < 4) return false;
  for (std::size_t i = h.size() - 3; i < h.size(); ++i)
    if (!(h[i].ratio >= 0.95)) return false;
  return true;
}

template <Monoid M>
typename M::Element dyadic_product(const M& m, const Germ<typename M::Element>& mu, double s, double t, int level) {
  const std::size_t cells = std::size_t{1} << level;
  typename M::Element acc = m.unit();
  double left = s;
  for (std::size_t i = 0; i < cells; ++i) {
    const double right = i + 1 == cells ? t : s + (t - s) * (static_cast<double>(i + 1) / static_cast<double>(cells));
    acc = m.compose(mu(left, right), acc);
    left = right;
  }
  return acc;
}

}  // namespace detail

/// Limit of dyadic partition products of an almost-multiplicative germ on [s, t].
/// Stops once consecutive estimates are within `tol`; the reported level is the coarser of the two.
/// With `extrapolation > 0` (linear monoids only) estimates are Romberg-extrapolated in the mesh.
template <Monoid M>
SewResult<typename M::Element> multiplicative_sew(const M& m, const Germ<typename M::Element>& mu,
                                                  const Control& omega, double z, double s, double t,
                                                  const SewOptions& opt = {}) {
  using E = typename M::Element;
  if (!(z > 1.0)) throw InvalidArgument("sewing exponent z must exceed 1");
  if (!(s < t)) throw InvalidArgument("sewing interval must satisfy s < t");
  if (opt.max_level < 1 || opt.max_level > 24) throw InvalidArgument("sewing max level must lie in [1, 24]");
  if constexpr (!LinearMonoid<M>) {
    if (opt.extrapolation > 0) throw InvalidArgument("extrapolation requires a linear monoid");
  }
  SewResult<E> out;
  const E base = mu(s, t);
  const double scale = std::pow(omega(s, t), z);
  std::vector<E> row{base};
  E previous_raw = base;
  E previous = base;
  out.value = base;
  for (int k = 1; k <= opt.max_level; ++k) {
    E raw = detail::dyadic_product(m, mu, s, t, k);
    std::vector<E> next{raw};
    if constexpr (LinearMonoid<M>) {
      const int cols = std::min(k, opt.extrapolation);
      for (int j = 1; j <= cols; ++j) {
        const double f = std::ldexp(1.0, j);
        next.push_back(m.combine(next[j - 1], f / (f - 1.0), row[j - 1], -1.0 / (f - 1.0)));
      }
    }
    const E& estimate = next.back();
    SewLevel entry;
    entry.level = k;
    entry.mesh = (t - s) / std::ldexp(1.0, k);
    entry.residual = m.distance(estimate, previous);
    entry.plain_residual = m.distance(raw, previous_raw);
    entry.ratio = out.history.empty() || out.history.back().residual == 0.0
                      ? 0.0
                      : entry.residual / out.history.back().residual;
    out.history.push_back(entry);
    if (scale > 0.0) out.maximal_constant = std::max(out.maximal_constant, m.distance(base, raw) / scale);
    out.value = estimate;
    out.residual = entry.residual;
    out.level = k;
    if (entry.residual <= opt.tol) {
      out.converged = true;
      out.level = k - 1;
      return out;
    }
    if (detail::stagnating(out.history)) {
      out.diagnostic = "dyadic residuals stopped decreasing geometrically at level " + std::to_string(k) +
                       " (residual " + std::to_string(entry.residual) + ")";
      return out;
    }
    previous_raw = std::move(raw);
    previous = estimate;
    row = std::move(next);
  }
  out.diagnostic = "maximum dyadic level reached with residual " + std::to_string(out.residual);
  return out;
}

/// Sewing over a fixed grid: index-dyadic coarsenings of grid[first..last], the finest level being the
/// full sub-grid. mu(i, j) is the germ on grid indices. The value is the finest product; the history
/// records residuals between successive coarsenings.
template <Monoid M>
SewResult<typename M::Element> grid_sew(const M& m, const std::function<typename M::Element(std::size_t, std::size_t)>& mu,
                                        const Partition& grid, std::size_t first, std::size_t last) {
  using E = typename M::Element;
  if (first >= last || last >= grid.size()) throw InvalidArgument("grid sewing needs first < last within the grid");
  const std::size_t n = last - first;
  int levels = 0;
  while ((std::size_t{1} << levels) < n) ++levels;
  SewResult<E> out;
  E previous = mu(first, last);
  out.value = previous;
  for (int k = 1; k <= levels; ++k) {
    const std::size_t parts = std::size_t{1} << k;
    E acc = m.unit();
    std::size_t left = first;
    for (std::size_t p = 1; p <= parts; ++p) {
      const std::size_t right = first + (p * n) / parts;
      if (right == left) continue;
      acc = m.compose(mu(left, right), acc);
      left = right;
    }
    SewLevel entry;
    entry.level = k;
    entry.mesh = grid[first + (n + parts - 1) / parts] - grid[first];
    entry.residual = m.distance(acc, previous);
    entry.plain_residual = entry.residual;
    entry.ratio = out.history.empty() || out.history.back().residual == 0.0
                      ? 0.0
                      : entry.residual / out.history.back().residual;
    out.history.push_back(entry);
    previous = acc;
  }
  out.value = previous;
  out.level = levels;
  out.residual = out.history.empty() ? 0.0 : out.history.back().residual;
  out.converged = true;
  return out;
}

struct MaximalProbe {
  std::vector<double> ratios;  // per dyadic level 1..levels
  double max_ratio = 0.0;
  double min_ratio = 0.0;
  /// max/min over levels; 1 when every ratio vanishes.
  double spread = 1.0;
};

/// d(mu_{t,s}, mu^{pi_k}_{t,s}) / omega(s,t)^z along dyadic levels.
template <Monoid M>
MaximalProbe maximal_inequality_probe(const M& m, const Germ<typename M::Element>& mu, const Control& omega, double z,
                                      double s, double t, int levels) {
  if (!(z > 1.0)) throw InvalidArgument("sewing exponent z must exceed 1");
  MaximalProbe out;
  const double scale = std::pow(omega(s, t), z);
  const auto base = mu(s, t);
  for (int k = 1; k <= levels; ++k) {
    const double d = m.distance(base, detail::dyadic_product(m, mu, s, t, k));
    out.ratios.push_back(scale > 0.0 ? d / scale : 0.0);
  }
  out.max_ratio = *std::max_element(out.ratios.begin(), out.ratios.end());
  out.min_ratio = *std::min_element(out.ratios.begin(), out.ratios.end());
  out.spread = out.max_ratio == 0.0 ? 1.0
               : out.min_ratio == 0.0 ? std::numeric_limits<double>::infinity()
                                      : out.max_ratio / out.min_ratio;
  return out;
}

/// 2^z zeta(z), the partition-independent factor of the maximal inequality.
double maximal_inequality_factor(double z);

struct ScalarMonoid {
  using Element = double;
  double compose(double a, double b) const { return a * b; }
  double unit() const { return 1.0; }
  double distance(double a, double b) const { return std::abs(a - b); }
  double size(double a) const { return std::abs(a); }
  double combine(double a, double x, double b, double y) const { return x * a + y * b; }
};

/// Bounded operators on one level of a spectral scale.
class OperatorMonoid {
public:
  using Element = LinearOp;
  OperatorMonoid(ScalePtr scale, double beta) : scale_(std::move(scale)), beta_(beta) {}
  LinearOp compose(const LinearOp& a, const LinearOp& b) const { return a * b; }
  LinearOp unit() const { return LinearOp::identity(scale_->size()); }
  double distance(const LinearOp& a, const LinearOp& b) const;
  double size(const LinearOp& a) const;
  LinearOp combine(const LinearOp& a, double x, const LinearOp& b, double y) const;
  const ScalePtr& scale() const { return scale_; }
  double beta() const { return beta_; }

private:
  ScalePtr scale_;
  double beta_;
};

struct AffineElement {
  LinearOp op;
  CVector shift;
};

/// Semi-direct product L(B_beta) x B_beta with (A, b)(C, c) = (AC, b + Ac).
class AffineMonoid {
public:
  using Element = AffineElement;
  AffineMonoid(ScalePtr scale, double beta) : scale_(std::move(scale)), beta_(beta) {}
  AffineElement compose(const AffineElement& a, const AffineElement& b) const;
  AffineElement unit() const;
  /// Operator-norm difference plus |b_1 - b_2|_beta.
  double distance(const AffineElement& a, const AffineElement& b) const;
  /// max(1, d(a, 0)).
  double size(const AffineElement& a) const;
  AffineElement combine(const AffineElement& a, double x, const AffineElement& b, double y) const;
  const ScalePtr& scale() const { return scale_; }
  double beta() const { return beta_; }

private:
  ScalePtr scale_;
  double beta_;
};

/// Two-parameter integrand xi(s, t) = xi_{t,s} and propagator S(s, t) = S_{t,s} for affine sewing.
using VectorGerm = std::function<CVector(double, double)>;
using OperatorGerm = std::function<LinearOp(double, double)>;

struct AffineSewResult {
  CVector value;
  SewResult<AffineElement> sew;
};

/// Limit of sum S_{t,u} xi_{v,u} over dyadic partitions of [s, t], sewn in the affine monoid at `beta`.
/// `gamma` is the regularity of the integrand and must exceed 1/3.
AffineSewResult affine_sew(const ScalePtr& scale, const VectorGerm& xi, const OperatorGerm& propagator, double gamma,
                           double beta, double s, double t, const SewOptions& opt = {});

}  // namespace roughevo
