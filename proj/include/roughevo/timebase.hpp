#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace roughevo {

/// Thrown for violated preconditions on public entry points.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Strictly increasing time grid on a closed interval.
class Partition {
public:
  explicit Partition(std::vector<double> points);

  static Partition dyadic(double start, double end, int level);
  static Partition uniform(double start, double end, std::size_t cells);

  std::size_t size() const { return points_.size(); }
  std::size_t cells() const { return points_.size() - 1; }
  double operator[](std::size_t i) const { return points_[i]; }
  double front() const { return points_.front(); }
  double back() const { return points_.back(); }
  double horizon() const { return points_.back() - points_.front(); }
  double mesh() const;
  std::span<const double> points() const { return points_; }

  /// Index of the grid point equal to t (within 1e-12 relative), or npos.
  std::size_t find(double t) const;
  /// Largest index i with points[i] <= t.
  std::size_t floor_index(double t) const;

  /// Contiguous sub-grid between indices [first, last].
  Partition slice(std::size_t first, std::size_t last) const;

  bool same_as(const Partition& other) const { return points_ == other.points_; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
  std::vector<double> points_;
};

Partition make_dyadic_partition(double start, double end, int level);

/// Superadditive two-parameter gauge omega(s, t) on s <= t.
class Control {
public:
  using Evaluator = std::function<double(double, double)>;

  Control(Evaluator eval, std::string description)
      : eval_(std::move(eval)), description_(std::move(description)) {}

  double operator()(double s, double t) const { return s >= t ? 0.0 : eval_(s, t); }
  const std::string& description() const { return description_; }

private:
  Evaluator eval_;
  std::string description_;
};

Control control_linear(double constant);

/// p-variation control of a two-parameter table g(i, j) (i < j) sampled on a grid.
/// Exact on the grid: dynamic programming over all grid subpartitions.
Control control_pvar(const Partition& grid,
                     const std::function<double(std::size_t, std::size_t)>& increment_norm,
                     double p);

Control control_sum(Control a, Control b);
/// omega_1^a * omega_2^b; superadditive when a + b >= 1.
Control control_product_power(Control first, double a, Control second, double b);

/// Largest violation omega(t,r)+omega(r,s)-omega(t,s) over all grid triples (negative or zero when superadditive).
double superadditivity_defect(const Control& omega, const Partition& grid);

struct SeminormReport {
  double value = 0.0;
  std::size_t first = 0;   // s index (earliest time)
  std::size_t middle = 0;  // u index, triple reports only
  std::size_t last = 0;    // t index (latest time)
};

/// sup_{i<j} increment_norm(i, j) / (t_j - t_i)^gamma over the grid.
SeminormReport pair_seminorm(const Partition& grid, double gamma,
                             const std::function<double(std::size_t, std::size_t)>& increment_norm);

/// Hoelder seminorm of a scalar path: sup |f_j - f_i| / (t_j - t_i)^gamma.
SeminormReport holder_seminorm(const Partition& grid, std::span<const double> values, double gamma);

/// Hoelder seminorm of a path whose values are measured through `diff_norm(i, j)` = |f_j - f_i|.
SeminormReport holder_seminorm(const Partition& grid, double gamma,
                               const std::function<double(std::size_t, std::size_t)>& diff_norm);

/// sup over grid triples s<u<t of |h(t,u,s)| / ((t-u)^g1 (u-s)^g2); h receives indices (t, u, s).
SeminormReport two_param_seminorm(
    const Partition& grid, double gamma1, double gamma2,
    const std::function<double(std::size_t, std::size_t, std::size_t)>& h_norm);

}  // namespace roughevo
