#include "roughevo/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "roughevo/convergence.hpp"

namespace roughevo {

namespace {

std::vector<std::size_t> subsample(const Partition& grid, std::size_t max_points) {
  std::size_t stride = 1;
  if (max_points >= 2)
    while ((grid.size() - 1) / stride + 1 > max_points) stride *= 2;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < grid.size(); i += stride) idx.push_back(i);
  if (idx.back() != grid.size() - 1) idx.push_back(grid.size() - 1);
  return idx;
}

Control family_control(const OperatorFamily& family, const Partition& grid, double& rho) {
  if (family.metadata().omega) {
    rho = family.metadata().rho;
    return *family.metadata().omega;
  }
  FamilyMetadata fitted = estimate_holder(family, grid);
  rho = fitted.rho;
  return *fitted.omega;
}

LinearOp sewn_cell(const OperatorFamily& family, double s, double t, const PropagatorOptions& options,
                   SewResult<LinearOp>* diagnostics = nullptr) {
  auto result = sew_propagator(family, s, t, options);
  LinearOp value = result.value;
  if (diagnostics) *diagnostics = std::move(result);
  return value;
}

}  // namespace

OperatorFamily OperatorFamily::diagonal(ScalePtr scale, DiagonalFn symbols, FamilyMetadata meta) {
  OperatorFamily f;
  f.scale_ = std::move(scale);
  f.diag_ = std::move(symbols);
  f.meta_ = std::move(meta);
  return f;
}

OperatorFamily OperatorFamily::dense(ScalePtr scale, DenseFn matrices, FamilyMetadata meta) {
  OperatorFamily f;
  f.scale_ = std::move(scale);
  f.dense_ = std::move(matrices);
  f.meta_ = std::move(meta);
  return f;
}

OperatorFamily OperatorFamily::constant(ScalePtr scale, const LinearOp& op, FamilyMetadata meta) {
  if (!meta.omega) meta.omega = control_linear(0.0);
  if (op.is_diagonal()) {
    const Eigen::VectorXd d = op.diagonal_entries().real();
    if ((op.diagonal_entries().imag().array() != 0.0).any())
      return dense(std::move(scale), [m = op.to_dense()](double) { return m; }, std::move(meta));
    return diagonal(std::move(scale), [d](double) { return d; }, std::move(meta));
  }
  return dense(std::move(scale), [m = op.matrix()](double) { return m; }, std::move(meta));
}

LinearOp OperatorFamily::at(double t) const {
  if (diag_) {
    const Eigen::VectorXd d = diag_(t);
    if (static_cast<std::size_t>(d.size()) != scale_->size()) throw InvalidArgument("family symbol size mismatch");
    return LinearOp::diagonal(d.cast<Complex>());
  }
  CMatrix m = dense_(t);
  if (static_cast<std::size_t>(m.rows()) != scale_->size()) throw InvalidArgument("family matrix size mismatch");
  return LinearOp::dense(std::move(m));
}

OperatorFamily operator+(const OperatorFamily& a, const OperatorFamily& b) {
  if (!a.scale_->same_as(*b.scale_)) throw InvalidArgument("families live on different scales");
  FamilyMetadata meta;
  meta.rho = std::min(a.meta_.rho, b.meta_.rho);
  meta.lambda_shift = a.meta_.lambda_shift + b.meta_.lambda_shift;
  if (a.is_diagonal() && b.is_diagonal())
    return OperatorFamily::diagonal(a.scale_, [fa = a.diag_, fb = b.diag_](double t) {
      return Eigen::VectorXd(fa(t) + fb(t));
    }, meta);
  return OperatorFamily::dense(a.scale_, [a, b](double t) { return CMatrix(a.at(t).to_dense() + b.at(t).to_dense()); },
                               meta);
}

OperatorFamily heat_family(ScalePtr scale, std::function<double(double)> nu) {
  Eigen::VectorXd symbols(static_cast<Eigen::Index>(scale->size()));
  for (std::size_t i = 0; i < scale->size(); ++i) symbols[static_cast<Eigen::Index>(i)] = scale->symbol(i);
  FamilyMetadata meta;
  return OperatorFamily::diagonal(std::move(scale), [symbols, nu = std::move(nu)](double t) {
    return Eigen::VectorXd(-nu(t) * symbols);
  }, meta);
}

OperatorFamily divergence_family(ScalePtr scale, std::function<GalerkinVector(double)> coefficient) {
  if (scale->is_flat()) throw InvalidArgument("divergence-form families need a torus scale");
  const std::size_t n = scale->size();
  return OperatorFamily::dense(scale, [scale, coefficient = std::move(coefficient), n](double t) {
    const GalerkinVector a = coefficient(t);
    CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
      const Mode& k = scale->mode(r);
      for (std::size_t c = 0; c < n; ++c) {
        const Mode& q = scale->mode(c);
        const std::size_t idx = scale->index_of(Mode{k[0] - q[0], k[1] - q[1]});
        if (idx == SpectralScale::npos) continue;
        const double dot = static_cast<double>(k[0]) * q[0] + static_cast<double>(k[1]) * q[1];
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = -dot * a[idx];
      }
    }
    return m;
  });
}

FamilyMetadata estimate_holder(const OperatorFamily& family, const Partition& grid) {
  FamilyMetadata meta = family.metadata();
  const auto idx = subsample(grid, 33);
  std::vector<LinearOp> ops;
  for (std::size_t i : idx) ops.push_back(family.at(grid[i]));
  std::vector<double> h, e;
  double worst = 0.0;
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      const double d = operator_norm(ops[b] - ops[a], *family.scale(), 1.0, 0.0);
      worst = std::max(worst, d);
      if (a == 0 && d > 0.0) {
        h.push_back(grid[idx[b]] - grid[idx[a]]);
        e.push_back(d);
      }
    }
  double rho = 1.0;
  if (h.size() >= 3) rho = std::clamp(fit_order(h, e).order, 0.05, 1.0);
  double c = 0.0;
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      const double d = operator_norm(ops[b] - ops[a], *family.scale(), 1.0, 0.0);
      c = std::max(c, d / std::pow(grid[idx[b]] - grid[idx[a]], rho));
    }
  meta.rho = rho;
  meta.omega = control_linear(worst == 0.0 ? 0.0 : std::pow(c, 1.0 / rho));
  return meta;
}

LinearOp exp_step(const OperatorFamily& family, double s, double t) {
  if (t == s) return LinearOp::identity(family.scale()->size());
  return expm(family.at(s).scaled(t - s));
}

SewResult<LinearOp> sew_propagator(const OperatorFamily& family, double s, double t,
                                   const PropagatorOptions& options) {
  const OperatorMonoid monoid(family.scale(), options.beta);
  const Germ<LinearOp> mu = [&family](double u, double v) { return exp_step(family, u, v); };
  SewOptions opt;
  opt.tol = options.tol;
  opt.max_level = options.max_level;
  opt.extrapolation = options.extrapolation;
  const double z = 1.0 + family.metadata().rho;
  const Control omega = family.metadata().omega ? *family.metadata().omega : control_linear(1.0);
  return multiplicative_sew(monoid, mu, omega, z, s, t, opt);
}

Propagator::Propagator(OperatorFamily family, Partition grid, PropagatorOptions options)
    : family_(std::move(family)), grid_(std::move(grid)), options_(options) {
  cells_.reserve(grid_.cells());
  for (std::size_t i = 0; i < grid_.cells(); ++i) {
    SewResult<LinearOp> diag;
    cells_.push_back(sewn_cell(family_, grid_[i], grid_[i + 1], options_, &diag));
    max_residual_ = std::max(max_residual_, diag.residual);
    max_level_ = std::max(max_level_, diag.level);
    if (!diag.converged && converged_) {
      converged_ = false;
      diagnostic_ = "cell " + std::to_string(i) + ": " + diag.diagnostic;
    }
  }
}

Propagator::Propagator(const Propagator& fine, Partition coarse)
    : family_(fine.family_), grid_(std::move(coarse)), options_(fine.options_), max_residual_(fine.max_residual_),
      max_level_(fine.max_level_), converged_(fine.converged_), diagnostic_(fine.diagnostic_) {
  std::size_t prev = fine.grid_.find(grid_[0]);
  if (prev == Partition::npos) throw InvalidArgument("coarse grid point is not a propagator grid point");
  cells_.reserve(grid_.cells());
  for (std::size_t i = 1; i < grid_.size(); ++i) {
    const std::size_t next = fine.grid_.find(grid_[i]);
    if (next == Partition::npos) throw InvalidArgument("coarse grid point is not a propagator grid point");
    LinearOp acc = fine.cells_[prev];
    for (std::size_t c = prev + 1; c < next; ++c) acc = fine.cells_[c] * acc;
    cells_.push_back(std::move(acc));
    prev = next;
  }
}

Propagator Propagator::restrict_to(const Partition& coarse) const { return Propagator(*this, coarse); }

LinearOp Propagator::between(std::size_t i, std::size_t j) const {
  if (i > j || j >= grid_.size()) throw InvalidArgument("propagator span out of range");
  if (i == j) return LinearOp::identity(size());
  if (j == i + 1) return cells_[i];
  {
    std::lock_guard<std::mutex> lock(cache_->mutex);
    auto it = cache_->spans.find({i, j});
    if (it != cache_->spans.end()) return it->second;
  }
  LinearOp acc = cells_[i];
  for (std::size_t c = i + 1; c < j; ++c) acc = cells_[c] * acc;
  std::lock_guard<std::mutex> lock(cache_->mutex);
  cache_->spans.emplace(std::make_pair(i, j), acc);
  return acc;
}

LinearOp Propagator::operator()(double s, double t) const {
  if (s > t) throw InvalidArgument("propagator queried with s > t");
  const double tol = 1e-12 * std::max(1.0, std::abs(grid_.back()));
  if (s < grid_.front() - tol || t > grid_.back() + tol) throw InvalidArgument("propagator queried outside its grid");
  if (s == t) return LinearOp::identity(size());
  const std::size_t is = grid_.find(s);
  const std::size_t it = grid_.find(t);
  if (is != Partition::npos && it != Partition::npos) return between(is, it);
  // First grid point at or after s, last at or before t.
  std::size_t i = is != Partition::npos ? is : grid_.floor_index(s) + 1;
  std::size_t j = it != Partition::npos ? it : grid_.floor_index(t);
  if (i > j || i >= grid_.size()) return exp_step(family_, s, t);
  LinearOp out = between(i, j);
  if (is == Partition::npos) out = out * exp_step(family_, s, grid_[i]);
  if (it == Partition::npos) out = exp_step(family_, grid_[j], t) * out;
  return out;
}

Propagator build_propagator(const OperatorFamily& family, const Partition& grid, const PropagatorOptions& options) {
  return Propagator(family, grid, options);
}

nlohmann::json PropertyReport::to_json() const {
  nlohmann::json j;
  j["cocycle_residual"] = cocycle_residual;
  nlohmann::json sm = nlohmann::json::array();
  for (const auto& [sigma, ratio] : smoothing_ratios) sm.push_back({{"sigma", sigma}, {"ratio", ratio}});
  j["smoothing_ratios"] = sm;
  j["proximity_ratio"] = {{"max", proximity_max}, {"min", proximity_min}, {"spread", proximity_spread}};
  j["identity_proximity"] = identity_proximity;
  j["derivative_order"] = std::isfinite(derivative_order) ? nlohmann::json(derivative_order) : nlohmann::json();
  j["growth_lambda"] = growth_lambda;
  return j;
}

double smoothing_ratio(const Propagator& s, double sigma, double alpha, const CVector& x, std::size_t max_points) {
  const auto& grid = s.grid();
  const auto& scale = *s.family().scale();
  const auto idx = subsample(grid, max_points);
  const double xnorm = x.size() == 0 ? 0.0 : weighted_norm(scale, x, alpha);
  double worst = 0.0;
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      const LinearOp op = s.between(idx[a], idx[b]);
      const double factor = std::pow(grid[idx[b]] - grid[idx[a]], sigma);
      const double value = x.size() == 0 ? operator_norm(op, scale, alpha, alpha + sigma)
                                         : weighted_norm(scale, op.apply(x), alpha + sigma) / xnorm;
      worst = std::max(worst, factor * value);
    }
  return worst;
}

PropertyReport verify_properties(const Propagator& s, const PropertyProbe& probe) {
  PropertyReport r;
  const auto& grid = s.grid();
  const auto& family = s.family();
  const auto& scale = *family.scale();
  const auto idx = subsample(grid, probe.max_points);

  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b)
      for (std::size_t c = b + 1; c < idx.size(); ++c) {
        const LinearOp lhs = s.between(idx[a], idx[c]);
        const LinearOp rhs = s.between(idx[b], idx[c]) * s.between(idx[a], idx[b]);
        r.cocycle_residual = std::max(r.cocycle_residual, operator_norm(lhs - rhs, scale, probe.alpha));
      }

  for (double sigma : probe.sigmas)
    r.smoothing_ratios.emplace_back(sigma, smoothing_ratio(s, sigma, probe.alpha, {}, probe.max_points));

  double rho = 1.0;
  const Control omega = family_control(family, grid, rho);
  r.proximity_min = std::numeric_limits<double>::infinity();
  r.growth_lambda = -std::numeric_limits<double>::infinity();
  const LinearOp id = LinearOp::identity(s.size());
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      const double t0 = grid[idx[a]], t1 = grid[idx[b]];
      const LinearOp op = s.between(idx[a], idx[b]);
      const double gauge = (t1 - t0) * std::pow(omega(t0, t1), rho);
      if (gauge > 0.0) {
        const double ratio = operator_norm(op - exp_step(family, t0, t1), scale, 1.0, 0.0) / gauge;
        r.proximity_max = std::max(r.proximity_max, ratio);
        r.proximity_min = std::min(r.proximity_min, ratio);
      }
      r.identity_proximity =
          std::max(r.identity_proximity, operator_norm(op - id, scale, probe.alpha + probe.identity_sigma, probe.alpha) /
                                             std::pow(t1 - t0, probe.identity_sigma));
      const double norm = operator_norm(op, scale, probe.alpha);
      r.growth_lambda = std::max(r.growth_lambda, norm > 0.0 ? std::log(norm) / (t1 - t0) : -1e300);
    }
  if (!std::isfinite(r.proximity_min)) r.proximity_min = 0.0;
  r.proximity_spread = r.proximity_min > 0.0 ? r.proximity_max / r.proximity_min
                       : r.proximity_max == 0.0 ? 1.0
                                                : std::numeric_limits<double>::infinity();

  // Forward difference in t at the middle grid point against L_t S_{t,s} x.
  const std::size_t mid = grid.size() / 2;
  const double tm = grid[mid];
  const double h0 = grid[mid + 1] - tm;
  const CVector x = scale.weights(-probe.alpha - 1.0).cast<Complex>();
  const CVector base = s.between(0, mid).apply(x);
  const CVector lx = family.at(tm).apply(base);
  std::vector<double> hs, res;
  for (int j = 1; j <= 6; ++j) {
    const double h = h0 * std::ldexp(1.0, -j);
    const CVector ahead = s(grid.front(), tm + h).apply(x);
    const double e = weighted_norm(scale, (ahead - base) / h - lx, probe.alpha);
    if (e > 0.0) {
      hs.push_back(h);
      res.push_back(e);
    }
  }
  r.derivative_order = hs.size() >= 3 ? fit_order(hs, res).order : std::numeric_limits<double>::quiet_NaN();
  return r;
}

double heat_smoothing_oracle(const SpectralScale& scale, double sigma, double horizon) {
  double best = 0.0;
  for (std::size_t i = 0; i < scale.size(); ++i) {
    const double k2 = scale.symbol(i);
    const double tau = k2 > 0.0 ? std::min(sigma / k2, horizon) : horizon;
    best = std::max(best, std::pow(tau, sigma) * std::exp(-k2 * tau) * std::pow(1.0 + k2, sigma));
  }
  return best;
}

namespace {

SplitResult finish_split(const OperatorFamily& a, const OperatorFamily& b, double s, double t, LinearOp op,
                         const PropagatorOptions& options) {
  const LinearOp reference = sew_propagator(a + b, s, t, options).value;
  SplitResult r;
  const LinearOp diff = op - reference;
  r.error = operator_norm(diff, *a.scale(), 2.0, 0.0);
  r.max_entry_error = max_entry(diff);
  r.difference = diff.to_dense();
  r.op = std::move(op);
  return r;
}

void check_split(const OperatorFamily& a, const OperatorFamily& b, double s, double t, int n) {
  if (n < 1) throw InvalidArgument("splitting needs at least one step");
  if (!(s < t)) throw InvalidArgument("splitting interval must satisfy s < t");
  if (!a.scale()->same_as(*b.scale())) throw InvalidArgument("split families live on different scales");
}

}  // namespace

SplitResult lie_trotter(const OperatorFamily& a, const OperatorFamily& b, double s, double t, int n,
                        const PropagatorOptions& options) {
  check_split(a, b, s, t, n);
  LinearOp acc = LinearOp::identity(a.scale()->size());
  for (int i = 0; i < n; ++i) {
    const double u = s + (t - s) * i / n;
    const double v = i + 1 == n ? t : s + (t - s) * (i + 1) / n;
    acc = sewn_cell(a, u, v, options) * sewn_cell(b, u, v, options) * acc;
  }
  return finish_split(a, b, s, t, std::move(acc), options);
}

SplitResult strang(const OperatorFamily& a, const OperatorFamily& b, double s, double t, int n,
                   const PropagatorOptions& options) {
  check_split(a, b, s, t, n);
  LinearOp acc = LinearOp::identity(a.scale()->size());
  for (int i = 0; i < n; ++i) {
    const double u = s + (t - s) * i / n;
    const double v = i + 1 == n ? t : s + (t - s) * (i + 1) / n;
    const double m = 0.5 * (u + v);
    acc = sewn_cell(a, m, v, options) * sewn_cell(b, u, v, options) * sewn_cell(a, u, m, options) * acc;
  }
  return finish_split(a, b, s, t, std::move(acc), options);
}

CommutatorProbe commutator_probe(const OperatorFamily& a, const OperatorFamily& b, double u, double v,
                                 const std::vector<double>& taus, double beta) {
  CommutatorProbe out;
  const LinearOp av = a.at(v), bu = b.at(u);
  for (double tau : taus) {
    if (!(tau > 0.0)) throw InvalidArgument("commutator probe needs positive tau");
    const LinearOp ea = expm(av.scaled(tau)), eb = expm(bu.scaled(tau));
    out.taus.push_back(tau);
    out.ratios.push_back(operator_norm(ea * eb - eb * ea, *a.scale(), beta) / (tau * tau));
  }
  if (!out.ratios.empty()) {
    const double hi = *std::max_element(out.ratios.begin(), out.ratios.end());
    const double lo = *std::min_element(out.ratios.begin(), out.ratios.end());
    out.spread = hi == 0.0 ? 1.0 : lo == 0.0 ? std::numeric_limits<double>::infinity() : hi / lo;
  }
  return out;
}

}  // namespace roughevo
