#include "roughevo/timebase.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace roughevo {

Partition::Partition(std::vector<double> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw InvalidArgument("partition needs at least two points");
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    if (!(points_[i] < points_[i + 1]))
      throw InvalidArgument("partition points must be strictly increasing");
  }
}

Partition Partition::dyadic(double start, double end, int level) {
  if (!(start < end)) throw InvalidArgument("degenerate interval: start must be < end");
  if (level < 0 || level > 24) throw InvalidArgument("dyadic level must lie in [0, 24]");
  const std::size_t cells = std::size_t{1} << level;
  std::vector<double> pts(cells + 1);
  const double width = end - start;
  for (std::size_t i = 0; i <= cells; ++i)
    pts[i] = start + width * (static_cast<double>(i) / static_cast<double>(cells));
  pts.back() = end;
  return Partition(std::move(pts));
}

Partition Partition::uniform(double start, double end, std::size_t cells) {
  if (!(start < end)) throw InvalidArgument("degenerate interval: start must be < end");
  if (cells == 0) throw InvalidArgument("uniform partition needs at least one cell");
  std::vector<double> pts(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i)
    pts[i] = start + (end - start) * (static_cast<double>(i) / static_cast<double>(cells));
  pts.back() = end;
  return Partition(std::move(pts));
}

double Partition::mesh() const {
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) m = std::max(m, points_[i + 1] - points_[i]);
  return m;
}

std::size_t Partition::find(double t) const {
  const double scale = std::max(1.0, std::abs(horizon()));
  auto it = std::lower_bound(points_.begin(), points_.end(), t - 1e-12 * scale);
  if (it != points_.end() && std::abs(*it - t) <= 1e-12 * scale)
    return static_cast<std::size_t>(it - points_.begin());
  return npos;
}

std::size_t Partition::floor_index(double t) const {
  if (t < points_.front()) throw InvalidArgument("time before partition start");
  auto it = std::upper_bound(points_.begin(), points_.end(), t);
  return static_cast<std::size_t>(it - points_.begin()) - 1;
}

Partition Partition::slice(std::size_t first, std::size_t last) const {
  if (!(first < last) || last >= points_.size()) throw InvalidArgument("invalid partition slice");
  return Partition(std::vector<double>(points_.begin() + static_cast<std::ptrdiff_t>(first),
                                       points_.begin() + static_cast<std::ptrdiff_t>(last) + 1));
}

Partition make_dyadic_partition(double start, double end, int level) {
  return Partition::dyadic(start, end, level);
}

Control control_linear(double constant) {
  if (constant < 0.0) throw InvalidArgument("linear control constant must be nonnegative");
  return Control([constant](double s, double t) { return constant * (t - s); },
                 "linear(C=" + std::to_string(constant) + ")");
}

Control control_pvar(const Partition& grid,
                     const std::function<double(std::size_t, std::size_t)>& increment_norm,
                     double p) {
  if (p < 1.0) throw InvalidArgument("p-variation exponent must be >= 1");
  const std::size_t n = grid.size();
  // table[a * n + b]: sup over subpartitions of [t_a, t_b] of sum |g|^p.
  auto table = std::make_shared<std::vector<double>>(n * n, 0.0);
  std::vector<double> powered(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) powered[i * n + j] = std::pow(increment_norm(i, j), p);
  for (std::size_t a = 0; a < n; ++a) {
    double* row = table->data() + a * n;
    for (std::size_t b = a + 1; b < n; ++b) {
      double best = 0.0;
      for (std::size_t c = a; c < b; ++c) best = std::max(best, row[c] + powered[c * n + b]);
      row[b] = best;
    }
  }
  auto points = std::make_shared<Partition>(grid);
  return Control(
      [table, points, n](double s, double t) {
        // Largest grid sub-interval contained in [s, t].
        const auto& pts = points->points();
        auto lo = std::lower_bound(pts.begin(), pts.end(), s - 1e-14);
        auto hi = std::upper_bound(pts.begin(), pts.end(), t + 1e-14);
        if (lo == pts.end() || hi == pts.begin()) return 0.0;
        const auto a = static_cast<std::size_t>(lo - pts.begin());
        const auto b = static_cast<std::size_t>(hi - pts.begin()) - 1;
        if (b <= a) return 0.0;
        return (*table)[a * n + b];
      },
      "pvar(p=" + std::to_string(p) + ")");
}

Control control_sum(Control a, Control b) {
  auto desc = a.description() + "+" + b.description();
  return Control([a = std::move(a), b = std::move(b)](double s, double t) { return a(s, t) + b(s, t); },
                 std::move(desc));
}

Control control_product_power(Control first, double a, Control second, double b) {
  if (a < 0.0 || b < 0.0) throw InvalidArgument("control exponents must be nonnegative");
  auto desc = "(" + first.description() + ")^" + std::to_string(a) + "*(" + second.description() + ")^" +
              std::to_string(b);
  return Control(
      [first = std::move(first), second = std::move(second), a, b](double s, double t) {
        return std::pow(first(s, t), a) * std::pow(second(s, t), b);
      },
      std::move(desc));
}

double superadditivity_defect(const Control& omega, const Partition& grid) {
  const std::size_t n = grid.size();
  std::vector<double> table(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) table[i * n + j] = omega(grid[i], grid[j]);
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t r = s; r < n; ++r)
      for (std::size_t t = r; t < n; ++t)
        worst = std::max(worst, table[s * n + r] + table[r * n + t] - table[s * n + t]);
  return worst;
}

SeminormReport pair_seminorm(const Partition& grid, double gamma,
                             const std::function<double(std::size_t, std::size_t)>& increment_norm) {
  SeminormReport rep;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = i + 1; j < grid.size(); ++j) {
      const double q = increment_norm(i, j) / std::pow(grid[j] - grid[i], gamma);
      if (q > rep.value) {
        rep.value = q;
        rep.first = i;
        rep.last = j;
      }
    }
  }
  return rep;
}

SeminormReport holder_seminorm(const Partition& grid, std::span<const double> values, double gamma) {
  if (values.empty()) throw InvalidArgument("empty grid");
  if (values.size() != grid.size()) throw InvalidArgument("value table does not match grid");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidArgument("Hoelder exponent must lie in (0, 1]");
  return pair_seminorm(grid, gamma,
                       [&](std::size_t i, std::size_t j) { return std::abs(values[j] - values[i]); });
}

SeminormReport holder_seminorm(const Partition& grid, double gamma,
                               const std::function<double(std::size_t, std::size_t)>& diff_norm) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidArgument("Hoelder exponent must lie in (0, 1]");
  return pair_seminorm(grid, gamma, diff_norm);
}

SeminormReport two_param_seminorm(
    const Partition& grid, double gamma1, double gamma2,
    const std::function<double(std::size_t, std::size_t, std::size_t)>& h_norm) {
  SeminormReport rep;
  const std::size_t n = grid.size();
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t u = s + 1; u < n; ++u)
      for (std::size_t t = u + 1; t < n; ++t) {
        const double q = h_norm(t, u, s) /
                         (std::pow(grid[t] - grid[u], gamma1) * std::pow(grid[u] - grid[s], gamma2));
        if (q > rep.value) rep = {q, s, u, t};
      }
  return rep;
}

}  // namespace roughevo
