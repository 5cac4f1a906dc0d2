#include "roughevo/roughpath.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

namespace roughevo {

namespace {

// Fine grid with each cell of `grid` split into `refine` equal pieces.
std::vector<double> refine_grid(const Partition& grid, int refine) {
  if (refine < 1) throw InvalidArgument("refinement factor must be >= 1");
  std::vector<double> fine;
  fine.reserve(grid.cells() * static_cast<std::size_t>(refine) + 1);
  for (std::size_t i = 0; i < grid.cells(); ++i)
    for (int r = 0; r < refine; ++r)
      fine.push_back(grid[i] + (grid[i + 1] - grid[i]) * (static_cast<double>(r) / refine));
  fine.push_back(grid.back());
  return fine;
}

// Anchored second level of the piecewise-linear interpolation of `samples` on the fine grid,
// reported on every `refine`-th point.
void accumulate_piecewise_linear(std::size_t dim, const std::vector<Eigen::VectorXd>& samples, int refine,
                                 std::vector<Eigen::VectorXd>& values, std::vector<Eigen::MatrixXd>& anchored) {
  const Eigen::VectorXd& x0 = samples.front();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  values.clear();
  anchored.clear();
  values.push_back(x0);
  anchored.push_back(acc);
  for (std::size_t k = 0; k + 1 < samples.size(); ++k) {
    const Eigen::VectorXd left = samples[k] - x0;
    const Eigen::VectorXd dx = samples[k + 1] - samples[k];
    acc += left * dx.transpose() + 0.5 * dx * dx.transpose();
    if ((k + 1) % static_cast<std::size_t>(refine) == 0) {
      values.push_back(samples[k + 1]);
      anchored.push_back(acc);
    }
  }
}

}  // namespace

std::string to_string(LiftKind kind) {
  switch (kind) {
    case LiftKind::SmoothQuadrature: return "smooth-quadrature";
    case LiftKind::PiecewiseLinear: return "piecewise-linear";
    case LiftKind::BrownianIto: return "brownian-ito";
    case LiftKind::BrownianStratonovich: return "brownian-stratonovich";
    case LiftKind::FbmPiecewiseLinear: return "fbm-piecewise-linear";
    case LiftKind::Custom: return "custom";
  }
  return "custom";
}

LiftKind lift_kind_from_string(const std::string& name) {
  static const std::map<std::string, LiftKind> table = {
      {"smooth-quadrature", LiftKind::SmoothQuadrature},
      {"piecewise-linear", LiftKind::PiecewiseLinear},
      {"brownian-ito", LiftKind::BrownianIto},
      {"brownian-stratonovich", LiftKind::BrownianStratonovich},
      {"fbm-piecewise-linear", LiftKind::FbmPiecewiseLinear},
      {"custom", LiftKind::Custom},
  };
  auto it = table.find(name);
  if (it == table.end()) throw InvalidArgument("unknown lift kind '" + name + "'");
  return it->second;
}

RoughPath::RoughPath(Partition grid, std::vector<Eigen::VectorXd> values, std::vector<Eigen::MatrixXd> anchored,
                     double gamma, LiftSpec spec)
    : grid_(std::move(grid)), gamma_(gamma), spec_(spec) {
  if (values.size() != grid_.size() || anchored.size() != grid_.size())
    throw InvalidArgument("rough path tables do not match the grid");
  dim_ = static_cast<std::size_t>(values.front().size());
  if (dim_ == 0) throw InvalidArgument("rough path dimension must be positive");
  if (!(gamma > 1.0 / 3.0 && gamma <= 0.5)) throw InvalidArgument("rough path exponent must lie in (1/3, 1/2]");
  x_.resize(grid_.size() * dim_);
  anchored_.resize(grid_.size() * dim_ * dim_);
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    if (static_cast<std::size_t>(values[i].size()) != dim_ || static_cast<std::size_t>(anchored[i].rows()) != dim_ ||
        static_cast<std::size_t>(anchored[i].cols()) != dim_)
      throw InvalidArgument("inconsistent rough path dimensions");
    for (std::size_t a = 0; a < dim_; ++a) {
      x_[i * dim_ + a] = values[i][static_cast<Eigen::Index>(a)];
      for (std::size_t b = 0; b < dim_; ++b)
        anchored_[(i * dim_ + a) * dim_ + b] = anchored[i](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
  }
}

RoughPath RoughPath::from_pair_function(Partition grid, std::vector<Eigen::VectorXd> values, PairFunction second,
                                        double gamma) {
  const std::size_t d = static_cast<std::size_t>(values.front().size());
  std::vector<Eigen::MatrixXd> zeros(values.size(),
                                     Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)));
  RoughPath rp(std::move(grid), std::move(values), std::move(zeros), gamma, LiftSpec{});
  rp.pair_fn_ = std::move(second);
  return rp;
}

Eigen::VectorXd RoughPath::value(std::size_t i) const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(dim_));
  for (std::size_t a = 0; a < dim_; ++a) v[static_cast<Eigen::Index>(a)] = x_[i * dim_ + a];
  return v;
}

Eigen::VectorXd RoughPath::increment(std::size_t i, std::size_t j) const { return value(j) - value(i); }

double RoughPath::second(std::size_t i, std::size_t j, std::size_t a, std::size_t b) const {
  if (pair_fn_) return pair_fn_(i, j)(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  const double chen = (x_[i * dim_ + a] - x_[a]) * (x_[j * dim_ + b] - x_[i * dim_ + b]);
  return anchored_[(j * dim_ + a) * dim_ + b] - anchored_[(i * dim_ + a) * dim_ + b] - chen;
}

Eigen::MatrixXd RoughPath::second(std::size_t i, std::size_t j) const {
  if (i > j) throw InvalidArgument("second level requested for a reversed pair");
  if (pair_fn_) return pair_fn_(i, j);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
  for (std::size_t a = 0; a < dim_; ++a)
    for (std::size_t b = 0; b < dim_; ++b)
      m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = second(i, j, a, b);
  return m;
}

RoughPath RoughPath::scaled(double factor) const {
  RoughPath out = *this;
  for (double& v : out.x_) v *= factor;
  for (double& v : out.anchored_) v *= factor * factor;
  if (pair_fn_) {
    auto fn = pair_fn_;
    out.pair_fn_ = [fn, factor](std::size_t i, std::size_t j) { return Eigen::MatrixXd(factor * factor * fn(i, j)); };
  }
  out.spec_.kind = LiftKind::Custom;
  return out;
}

RoughPath RoughPath::with_gamma(double gamma) const {
  if (!(gamma > 1.0 / 3.0 && gamma <= 0.5)) throw InvalidArgument("rough path exponent must lie in (1/3, 1/2]");
  RoughPath out = *this;
  out.gamma_ = gamma;
  return out;
}

RoughPath lift_smooth(const std::function<Eigen::VectorXd(double)>& path, const Partition& grid, int refine,
                      double gamma) {
  const std::vector<double> fine = refine_grid(grid, refine);
  // Q[p][q] = int_0^1 L_p(u) L_q'(u) du for the quadratic Lagrange basis on {0, 1/2, 1};
  // 3-point Gauss is exact for the cubic integrands.
  const double gx[3] = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
  const double gw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  double q[3][3] = {};
  for (int g = 0; g < 3; ++g) {
    const double u = gx[g];
    const double l[3] = {2.0 * (u - 0.5) * (u - 1.0), -4.0 * u * (u - 1.0), 2.0 * u * (u - 0.5)};
    const double dl[3] = {4.0 * u - 3.0, -8.0 * u + 4.0, 4.0 * u - 1.0};
    for (int p = 0; p < 3; ++p)
      for (int r = 0; r < 3; ++r) q[p][r] += gw[g] * l[p] * dl[r];
  }
  const Eigen::VectorXd x0 = path(fine.front());
  const auto d = x0.size();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
  std::vector<Eigen::VectorXd> values{x0};
  std::vector<Eigen::MatrixXd> anchored{acc};
  Eigen::VectorXd left = x0;
  for (std::size_t k = 0; k + 1 < fine.size(); ++k) {
    const Eigen::VectorXd mid = path(0.5 * (fine[k] + fine[k + 1]));
    const Eigen::VectorXd right = path(fine[k + 1]);
    if (mid.size() != d || right.size() != d) throw InvalidArgument("path changed dimension");
    const Eigen::VectorXd f[3] = {left - x0, mid - x0, right - x0};
    const Eigen::VectorXd g[3] = {left, mid, right};
    for (int p = 0; p < 3; ++p)
      for (int r = 0; r < 3; ++r) acc += q[p][r] * f[p] * g[r].transpose();
    left = right;
    if ((k + 1) % static_cast<std::size_t>(refine) == 0) {
      values.push_back(right);
      anchored.push_back(acc);
    }
  }
  return RoughPath(grid, std::move(values), std::move(anchored), gamma,
                   LiftSpec{LiftKind::SmoothQuadrature, 0, 0.5, refine});
}

RoughPath lift_piecewise_linear(const Partition& grid, const std::vector<Eigen::VectorXd>& samples, double gamma) {
  if (samples.size() < 2) throw InvalidArgument("piecewise-linear lift needs at least two samples");
  if (samples.size() != grid.size()) throw InvalidArgument("samples do not match the grid");
  std::vector<Eigen::VectorXd> values;
  std::vector<Eigen::MatrixXd> anchored;
  accumulate_piecewise_linear(static_cast<std::size_t>(samples.front().size()), samples, 1, values, anchored);
  return RoughPath(grid, std::move(values), std::move(anchored), gamma, LiftSpec{LiftKind::PiecewiseLinear, 0, 0.5, 1});
}

RoughPath sample_bm_lift(int dimension, const Partition& grid, std::uint64_t seed, Convention convention, int refine,
                         double gamma) {
  if (dimension <= 0) throw InvalidArgument("Brownian dimension must be positive");
  const std::vector<double> fine = refine_grid(grid, refine);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto d = static_cast<Eigen::Index>(dimension);
  std::vector<Eigen::VectorXd> samples{Eigen::VectorXd::Zero(d)};
  samples.reserve(fine.size());
  for (std::size_t k = 0; k + 1 < fine.size(); ++k) {
    const double sd = std::sqrt(fine[k + 1] - fine[k]);
    Eigen::VectorXd next = samples.back();
    for (Eigen::Index a = 0; a < d; ++a) next[a] += sd * normal(rng);
    samples.push_back(std::move(next));
  }
  // Stratonovich level from the Wong-Zakai (piecewise-linear) lift of the fine samples;
  // the Ito level subtracts (t - s)/2 on the diagonal.
  std::vector<Eigen::VectorXd> values;
  std::vector<Eigen::MatrixXd> anchored;
  accumulate_piecewise_linear(static_cast<std::size_t>(dimension), samples, refine, values, anchored);
  if (convention == Convention::Ito) {
    for (std::size_t i = 0; i < anchored.size(); ++i)
      anchored[i] -= 0.5 * (grid[i] - grid.front()) * Eigen::MatrixXd::Identity(d, d);
  }
  const LiftKind kind = convention == Convention::Ito ? LiftKind::BrownianIto : LiftKind::BrownianStratonovich;
  return RoughPath(grid, std::move(values), std::move(anchored), gamma, LiftSpec{kind, seed, 0.5, refine});
}

double fbm_covariance(double hurst, double s, double t) {
  const double h2 = 2.0 * hurst;
  return 0.5 * (std::pow(std::abs(s), h2) + std::pow(std::abs(t), h2) - std::pow(std::abs(t - s), h2));
}

RoughPath sample_fbm_lift(double hurst, const Partition& grid, std::uint64_t seed, int refine, int dimension,
                          double gamma) {
  if (!(hurst > 1.0 / 3.0 && hurst <= 0.5)) throw InvalidArgument("Hurst index must lie in (1/3, 1/2]");
  if (dimension <= 0) throw InvalidArgument("fBM dimension must be positive");
  const std::vector<double> fine = refine_grid(grid, refine);
  const std::size_t m = fine.size() - 1;
  if (m > 4096) throw InvalidArgument("exact fBM sampling is limited to 4096 points");
  const double t0 = fine.front();
  Eigen::MatrixXd cov(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          fbm_covariance(hurst, fine[a + 1] - t0, fine[b + 1] - t0);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw InvalidArgument("fBM covariance factorization failed");
  const Eigen::MatrixXd chol = llt.matrixL();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto d = static_cast<Eigen::Index>(dimension);
  Eigen::MatrixXd z(static_cast<Eigen::Index>(m), d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(m); ++k) z(k, a) = normal(rng);
  const Eigen::MatrixXd paths = chol * z;
  std::vector<Eigen::VectorXd> samples{Eigen::VectorXd::Zero(d)};
  for (std::size_t k = 0; k < m; ++k) samples.push_back(paths.row(static_cast<Eigen::Index>(k)).transpose());
  std::vector<Eigen::VectorXd> values;
  std::vector<Eigen::MatrixXd> anchored;
  accumulate_piecewise_linear(static_cast<std::size_t>(dimension), samples, refine, values, anchored);
  if (gamma <= 0.0) gamma = hurst - 0.05 > 1.0 / 3.0 ? hurst - 0.05 : 0.5 * (hurst + 1.0 / 3.0);
  return RoughPath(grid, std::move(values), std::move(anchored), gamma,
                   LiftSpec{LiftKind::FbmPiecewiseLinear, seed, hurst, refine});
}

double chen_residual(const RoughPath& rp, std::size_t max_points) {
  const auto& grid = rp.grid();
  std::size_t stride = 1;
  while ((grid.size() - 1) / stride + 1 > max_points) stride *= 2;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < grid.size(); i += stride) idx.push_back(i);
  if (idx.back() != grid.size() - 1) idx.push_back(grid.size() - 1);
  const std::size_t d = rp.dimension();
  double worst = 0.0;
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b)
      for (std::size_t c = b + 1; c < idx.size(); ++c) {
        const std::size_t s = idx[a], u = idx[b], t = idx[c];
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t j = 0; j < d; ++j) {
            const double lhs = rp.second(s, t, i, j) - rp.second(u, t, i, j) - rp.second(s, u, i, j);
            const double rhs = rp.increment(s, u, i) * rp.increment(u, t, j);
            worst = std::max(worst, std::abs(lhs - rhs));
          }
      }
  return worst;
}

double geometric_defect(const RoughPath& rp) {
  const std::size_t d = rp.dimension();
  const std::size_t n = rp.grid().size();
  double worst = 0.0;
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = s + 1; t < n; ++t)
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
          const double sym = 0.5 * (rp.second(s, t, i, j) + rp.second(s, t, j, i));
          worst = std::max(worst, std::abs(sym - 0.5 * rp.increment(s, t, i) * rp.increment(s, t, j)));
        }
  return worst;
}

namespace {

// pair_seminorm over an index subsample, reporting grid indices.
SeminormReport sampled_seminorm(const Partition& grid, double gamma, std::size_t max_points,
                                const std::function<double(std::size_t, std::size_t)>& norm) {
  std::size_t stride = 1;
  if (max_points >= 2)
    while ((grid.size() - 1) / stride + 1 > max_points) stride *= 2;
  if (stride == 1) return pair_seminorm(grid, gamma, norm);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < grid.size(); i += stride) idx.push_back(i);
  if (idx.back() != grid.size() - 1) idx.push_back(grid.size() - 1);
  std::vector<double> times;
  for (std::size_t i : idx) times.push_back(grid[i]);
  SeminormReport r = pair_seminorm(Partition(std::move(times)), gamma,
                                   [&](std::size_t i, std::size_t j) { return norm(idx[i], idx[j]); });
  r.first = idx[r.first];
  r.last = idx[r.last];
  return r;
}

}  // namespace

SeminormReport first_level_seminorm(const RoughPath& a, double gamma, std::size_t max_points) {
  const std::size_t d = a.dimension();
  return sampled_seminorm(a.grid(), gamma, max_points, [&](std::size_t i, std::size_t j) {
    double acc = 0.0;
    for (std::size_t c = 0; c < d; ++c) acc += a.increment(i, j, c) * a.increment(i, j, c);
    return std::sqrt(acc);
  });
}

SeminormReport second_level_seminorm(const RoughPath& a, double gamma, std::size_t max_points) {
  const std::size_t d = a.dimension();
  return sampled_seminorm(a.grid(), 2.0 * gamma, max_points, [&](std::size_t i, std::size_t j) {
    double m = 0.0;
    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = 0; q < d; ++q) m = std::max(m, std::abs(a.second(i, j, p, q)));
    return m;
  });
}

double rough_distance(const RoughPath& a, const RoughPath& b, double gamma, std::size_t max_points) {
  if (!a.grid().same_as(b.grid())) throw InvalidArgument("rough paths live on different grids");
  if (a.dimension() != b.dimension()) throw InvalidArgument("rough paths have different dimensions");
  const std::size_t d = a.dimension();
  const auto& grid = a.grid();
  const double first = sampled_seminorm(grid, gamma, max_points, [&](std::size_t i, std::size_t j) {
                         double acc = 0.0;
                         for (std::size_t c = 0; c < d; ++c) {
                           const double diff = a.increment(i, j, c) - b.increment(i, j, c);
                           acc += diff * diff;
                         }
                         return std::sqrt(acc);
                       }).value;
  const double second = sampled_seminorm(grid, 2.0 * gamma, max_points, [&](std::size_t i, std::size_t j) {
                          double m = 0.0;
                          for (std::size_t p = 0; p < d; ++p)
                            for (std::size_t q = 0; q < d; ++q)
                              m = std::max(m, std::abs(a.second(i, j, p, q) - b.second(i, j, p, q)));
                          return m;
                        }).value;
  return first + second;
}

double rough_norm(const RoughPath& a, double gamma, std::size_t max_points) {
  return first_level_seminorm(a, gamma, max_points).value + second_level_seminorm(a, gamma, max_points).value;
}

void write_roughpath_csv(std::ostream& os, const RoughPath& rp) {
  const std::size_t d = rp.dimension();
  const auto& grid = rp.grid();
  os << std::setprecision(17);
  os << "# roughpath d=" << d << " gamma=" << rp.gamma() << " T=" << grid.horizon()
     << " kind=" << to_string(rp.spec().kind) << " seed=" << rp.spec().seed << " hurst=" << rp.spec().hurst
     << " refine=" << rp.spec().refine << "\n";
  os << "i,t";
  for (std::size_t a = 0; a < d; ++a) os << ",X" << a + 1;
  os << "\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    os << i << "," << grid[i];
    for (std::size_t a = 0; a < d; ++a) os << "," << rp.value(i, a);
    os << "\n";
  }
  os << "i,j";
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) os << ",XX" << a + 1 << b + 1;
  os << "\n";
  // Anchored pairs (0, j) determine every other pair through Chen.
  for (std::size_t j = 0; j < grid.size(); ++j) {
    os << 0 << "," << j;
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) os << "," << rp.second(0, j, a, b);
    os << "\n";
  }
}

RoughPath read_roughpath_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# roughpath", 0) != 0) throw InvalidArgument("missing rough path header");
  std::map<std::string, std::string> meta;
  {
    std::istringstream hs(line.substr(11));
    std::string tok;
    while (hs >> tok) {
      const auto eq = tok.find('=');
      if (eq != std::string::npos) meta[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
  }
  for (const char* key : {"d", "gamma", "kind", "seed"})
    if (!meta.count(key)) throw InvalidArgument(std::string("rough path header lacks '") + key + "'");
  const auto d = static_cast<std::size_t>(std::stoul(meta["d"]));
  const double gamma = std::stod(meta["gamma"]);
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  std::getline(is, line);  // column header
  std::vector<double> times;
  std::vector<Eigen::VectorXd> values;
  while (std::getline(is, line) && line.rfind("i,j", 0) != 0) {
    const auto cells = split(line);
    if (cells.size() != 2 + d) throw InvalidArgument("malformed rough path value row");
    times.push_back(std::stod(cells[1]));
    Eigen::VectorXd v(static_cast<Eigen::Index>(d));
    for (std::size_t a = 0; a < d; ++a) v[static_cast<Eigen::Index>(a)] = std::stod(cells[2 + a]);
    values.push_back(std::move(v));
  }
  std::vector<Eigen::MatrixXd> anchored;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 2 + d * d) throw InvalidArgument("malformed rough path pair row");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b)
        m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = std::stod(cells[2 + a * d + b]);
    anchored.push_back(std::move(m));
  }
  LiftSpec spec;
  spec.kind = lift_kind_from_string(meta["kind"]);
  spec.seed = std::stoull(meta["seed"]);
  if (meta.count("hurst")) spec.hurst = std::stod(meta["hurst"]);
  if (meta.count("refine")) spec.refine = std::stoi(meta["refine"]);
  return RoughPath(Partition(std::move(times)), std::move(values), std::move(anchored), gamma, spec);
}

}  // namespace roughevo
