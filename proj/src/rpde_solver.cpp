#include "roughevo/rpde_solver.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "roughevo/convergence.hpp"

namespace roughevo {

namespace {

constexpr std::size_t kRoughNormPoints = 257;

double sigma_of(const RpdeProblem& p) {
  double s = 0.0;
  for (const auto& f : p.diffusion) s = std::max(s, f->shift());
  return s;
}

double delta_of(const RpdeProblem& p) { return p.drift ? p.drift->shift() : 0.0; }

double gamma_of(const RpdeProblem& p, const SolveParams& params) {
  return params.gamma > 0.0 ? params.gamma : p.driver->gamma();
}

double gamma_prime_of(const RpdeProblem& p, const SolveParams& params) {
  return params.gamma_prime > 0.0 ? params.gamma_prime : 0.5 * (sigma_of(p) + gamma_of(p, params));
}

std::vector<CVector> apply_all(const Nonlinearity& f, const ScalePtr& scale, const std::vector<CVector>& y) {
  std::vector<CVector> out;
  out.reserve(y.size());
  for (const auto& v : y) out.push_back(f.apply(GalerkinVector(scale, v)).coefficients());
  return out;
}

// (F_1(y_i), ..., F_d(y_i)) for every point.
std::vector<std::vector<CVector>> diffusion_values(const RpdeProblem& p, const ScalePtr& scale,
                                                   const std::vector<CVector>& y) {
  std::vector<std::vector<CVector>> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    for (const auto& f : p.diffusion) out[i].push_back(f->apply(GalerkinVector(scale, y[i])).coefficients());
  return out;
}

double max_level_norm(const SpectralScale& scale, const std::vector<CVector>& y, double alpha, std::size_t* first_over,
                      double threshold) {
  double m = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double v = weighted_norm(scale, y[i], alpha);
    if (!std::isfinite(v)) {
      if (first_over && *first_over == std::numeric_limits<std::size_t>::max()) *first_over = i;
      return std::numeric_limits<double>::infinity();
    }
    if (first_over && v > threshold && *first_over == std::numeric_limits<std::size_t>::max()) *first_over = i;
    m = std::max(m, v);
  }
  return m;
}

// S_{.,s} x_s plus the convolution of the frozen pair (F(x), 0), carrying derivative F(x).
ControlledPath xi_path(const RpdeProblem& p, const GalerkinVector& x, std::size_t first, std::size_t last,
                       double alpha, double gamma) {
  const auto& scale = p.initial.scale();
  const std::size_t d = p.driver->dimension();
  std::vector<CVector> fx;
  for (const auto& f : p.diffusion) fx.push_back(f->apply(x).coefficients());
  std::vector<CVector> z{x.coefficients()};
  for (std::size_t i = first; i < last; ++i) {
    CVector inc = z.back();
    for (std::size_t a = 0; a < d; ++a) inc += p.driver->increment(i, i + 1, a) * fx[a];
    z.push_back(p.propagator->cell(i).apply(inc));
  }
  std::vector<std::vector<CVector>> zp(z.size(), fx);
  return ControlledPath(p.driver, scale, first, std::move(z), std::move(zp), alpha, gamma);
}

}  // namespace

double window_exponent(double gamma, double gamma_prime, double sigma, double delta) {
  return std::min({gamma - gamma_prime, gamma_prime - sigma, 1.0 - delta, 1.0 - 2.0 * gamma_prime});
}

void validate(const RpdeProblem& p, const SolveParams& params) {
  if (!p.propagator) throw InvalidArgument("problem needs a propagator");
  if (!p.driver) throw InvalidArgument("problem needs a driver");
  if (!p.initial.scale()) throw InvalidArgument("problem needs an initial datum");
  if (p.diffusion.size() != p.driver->dimension())
    throw InvalidArgument("need one diffusion coefficient per driver component");
  for (const auto& f : p.diffusion)
    if (!f) throw InvalidArgument("diffusion coefficient is missing");
  if (!p.propagator->grid().same_as(p.driver->grid()))
    throw InvalidArgument("propagator and driver live on different grids");
  if (!p.propagator->family().scale()->same_as(*p.initial.scale()))
    throw InvalidArgument("initial datum and propagator live on different scales");
  const double sigma = sigma_of(p), delta = delta_of(p);
  const double gamma = gamma_of(p, params), gp = gamma_prime_of(p, params);
  if (!(gamma > 1.0 / 3.0 && gamma <= 0.5)) throw InvalidArgument("gamma must lie in (1/3, 1/2]");
  if (!(sigma < gamma)) {
    std::ostringstream msg;
    msg << "subcriticality constraint sigma < gamma violated (sigma = " << sigma << ", gamma = " << gamma << ")";
    throw InvalidArgument(msg.str());
  }
  if (!(sigma < gp && gp <= gamma)) {
    std::ostringstream msg;
    msg << "subcriticality constraint sigma < gamma' <= gamma violated (sigma = " << sigma << ", gamma' = " << gp
        << ", gamma = " << gamma << ")";
    throw InvalidArgument(msg.str());
  }
  if (!(delta < 1.0)) throw InvalidArgument("drift constraint delta < 1 violated");
  if (!(params.tol > 0.0)) throw InvalidArgument("picard tolerance must be positive");
  if (params.max_iterations < 1) throw InvalidArgument("max picard iterations must be positive");
  if (!(params.window_constant > 0.0)) throw InvalidArgument("window constant must be positive");
  if (params.min_window_cells < 1) throw InvalidArgument("minimum window must hold at least one cell");
  if (!(params.blowup > 0.0)) throw InvalidArgument("blow-up threshold must be positive");
  if (params.max_restarts < 0) throw InvalidArgument("restart cap must be nonnegative");
}

ControlledPath solution_map(const RpdeProblem& p, const GalerkinVector& x, const ControlledPath& cp) {
  const auto& scale = cp.scale();
  const std::size_t off = cp.offset(), m = cp.points();
  Integrand fy;
  for (const auto& f : p.diffusion) fy.push_back(compose(cp, *f));
  std::vector<CVector> ys;
  ys.reserve(m);
  for (std::size_t i = 0; i < m; ++i) ys.push_back(cp.y(i));
  const bool drift = p.drift && !p.drift->is_zero();
  const std::vector<CVector> nv = drift ? apply_all(*p.drift, scale, ys) : std::vector<CVector>{};
  std::vector<CVector> z{x.coefficients()};
  z.reserve(m);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const double h = cp.time(i + 1) - cp.time(i);
    CVector inc = z.back() + compensated_germ(fy, i, i + 1);
    if (drift) inc += 0.5 * h * nv[i];
    CVector next = p.propagator->cell(off + i).apply(inc);
    if (drift) next += 0.5 * h * nv[i + 1];
    z.push_back(std::move(next));
  }
  std::vector<std::vector<CVector>> zp(m);
  for (std::size_t i = 0; i < m; ++i)
    for (const auto& c : fy) zp[i].push_back(c.y(i));
  return ControlledPath(cp.driver_ptr(), scale, off, std::move(z), std::move(zp), cp.alpha(), cp.gamma());
}

Solution picard_solve(const RpdeProblem& p, const SolveParams& params) {
  validate(p, params);
  const auto& scale = p.initial.scale();
  const auto& grid = p.driver->grid();
  const double alpha = params.alpha;
  const double gamma = gamma_of(p, params), gp = gamma_prime_of(p, params);
  const double eps = window_exponent(gamma, gp, sigma_of(p), delta_of(p));
  const double rho = rough_norm(*p.driver, gamma, kRoughNormPoints);
  const double tstar = eps > 0.0 ? std::min(1.0, params.window_constant * std::pow(1.0 + rho, -1.0 / eps)) : 0.0;
  const double mesh = grid.horizon() / static_cast<double>(grid.cells());
  const auto policy_cells = static_cast<std::size_t>(std::floor(tstar / mesh));
  const std::size_t base_cells = std::max(params.min_window_cells, policy_cells);

  std::vector<CVector> ys{p.initial.coefficients()};
  std::vector<WindowReport> windows;
  bool blowup = false, converged = true;
  std::string diagnostic;
  GalerkinVector x = p.initial;
  std::size_t start = 0;
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  while (start < grid.cells()) {
    std::size_t cells = base_cells;
    WindowReport report;
    std::vector<CVector> accepted;
    bool done = false;
    for (int restart = 0; !done; ++restart) {
      const std::size_t last = std::min(start + cells, grid.cells());
      report = WindowReport{start, last, 0, {}, 0.0, restart};
      ControlledPath y = xi_path(p, x, start, last, alpha, gamma);
      double prev = std::numeric_limits<double>::infinity();
      int increases = 0;
      bool ok = false;
      for (int k = 1; k <= params.max_iterations; ++k) {
        ControlledPath next = solution_map(p, x, y);
        const double dist = controlled_distance(next, y, gp, params.distance_points);
        report.iterations = k;
        report.residual = dist;
        if (std::isfinite(prev) && prev > 0.0) report.contraction.push_back(dist / prev);
        y = std::move(next);
        if (!std::isfinite(dist)) break;
        const double size = controlled_norm(y, params.distance_points);
        if (dist <= params.tol * (1.0 + size)) {
          ok = true;
          break;
        }
        increases = dist >= prev ? increases + 1 : 0;
        if (increases >= 3) break;
        prev = dist;
      }
      if (ok) {
        accepted.reserve(y.points());
        for (std::size_t i = 0; i < y.points(); ++i) accepted.push_back(y.y(i));
        done = true;
      } else if (cells > 1 && restart < params.max_restarts) {
        cells = std::max<std::size_t>(1, cells / 2);
      } else {
        std::ostringstream msg;
        msg << "picard iteration did not contract on [" << grid[start] << ", " << grid[last] << "] after " << restart
            << " window halvings";
        diagnostic = msg.str();
        converged = false;
        windows.push_back(report);
        break;
      }
    }
    if (!done) break;
    windows.push_back(report);
    std::size_t over = kNone;
    max_level_norm(*scale, accepted, alpha, &over, params.blowup);
    const std::size_t keep = over == kNone ? accepted.size() : over + 1;
    for (std::size_t i = 1; i < keep; ++i) ys.push_back(accepted[i]);
    if (over != kNone) {
      blowup = true;
      std::ostringstream msg;
      msg << "|u|_alpha exceeded " << params.blowup << " at t = " << grid[start + over];
      diagnostic = msg.str();
      break;
    }
    x = GalerkinVector(scale, accepted.back());
    start = windows.back().last;
  }

  const std::vector<std::vector<CVector>> yp = diffusion_values(p, scale, ys);
  const std::size_t last_index = ys.size() - 1;
  return Solution{ControlledPath(p.driver, scale, 0, std::move(ys), yp, alpha, gamma),
                  std::move(windows),
                  grid[last_index],
                  last_index,
                  blowup,
                  converged,
                  std::move(diagnostic),
                  static_cast<double>(base_cells) * mesh,
                  gp};
}

std::vector<double> weak_residual(const RpdeProblem& p, const Solution& sol, const GalerkinVector& phi) {
  const auto& u = sol.u;
  const auto& scale = u.scale();
  const std::size_t m = u.points(), d = u.dimension();
  const auto pair = [&](const CVector& v) { return pairing(GalerkinVector(scale, v), phi); };
  const bool drift = p.drift && !p.drift->is_zero();
  std::vector<Complex> deterministic(m);
  ScalarIntegrand integrand;
  for (std::size_t i = 0; i < m; ++i) {
    const GalerkinVector v = u.value(i);
    Complex g = pair(p.propagator->family().at(u.time(i)).apply(u.y(i)));
    if (drift) g += pairing(p.drift->apply(v), phi);
    deterministic[i] = g;
    Eigen::VectorXcd ya(d);
    CMatrix yab(d, d);
    std::vector<GalerkinVector> fv;
    for (std::size_t a = 0; a < d; ++a) fv.push_back(p.diffusion[a]->apply(v));
    for (std::size_t a = 0; a < d; ++a) {
      ya[static_cast<Eigen::Index>(a)] = pairing(fv[a], phi);
      const auto dirs = p.diffusion[a]->derivatives(v, fv);
      for (std::size_t b = 0; b < d; ++b)
        yab(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = pairing(dirs[b], phi);
    }
    integrand.y.push_back(std::move(ya));
    integrand.yprime.push_back(std::move(yab));
  }
  const std::vector<Complex> rough = plain_rough_integral(u.driver(), integrand, u.offset());
  const Complex start = pair(u.y(0));
  std::vector<double> out(m, 0.0);
  Complex acc = 0.0;
  for (std::size_t i = 1; i < m; ++i) {
    acc += 0.5 * (u.time(i) - u.time(i - 1)) * (deterministic[i] + deterministic[i - 1]);
    out[i] = std::abs(pair(u.y(i)) - start - acc - rough[i]);
  }
  return out;
}

StabilityReport stability_experiment(const RpdeProblem& p, const SolveParams& params, const GalerkinVector& h,
                                     const std::function<RoughPathPtr(double)>& perturbed_driver,
                                     const std::vector<double>& epsilons) {
  const Solution base = picard_solve(p, params);
  if (!base.converged || base.blowup) throw InvalidArgument("base solve failed: " + base.diagnostic);
  const double gamma = gamma_of(p, params);
  StabilityReport report;
  std::vector<double> es, ds;
  for (double eps : epsilons) {
    RpdeProblem q = p;
    if (h.scale()) q.initial = p.initial + Complex(eps) * h;
    if (perturbed_driver) q.driver = perturbed_driver(eps);
    const Solution other = picard_solve(q, params);
    if (other.u.points() != base.u.points())
      throw InvalidArgument("perturbed solve stopped at a different time (epsilon = " + std::to_string(eps) + ")");
    StabilityRow row;
    row.epsilon = eps;
    row.input_distance = (h.scale() ? std::abs(eps) * norm_beta(h, params.alpha) : 0.0) +
                         (perturbed_driver ? rough_distance(*p.driver, *q.driver, gamma, kRoughNormPoints) : 0.0);
    row.output_distance = controlled_distance(base.u, other.u, base.gamma_prime, params.distance_points);
    row.ratio = row.input_distance > 0.0 ? row.output_distance / row.input_distance : 0.0;
    report.rows.push_back(row);
    if (eps > 0.0 && row.output_distance > 0.0) {
      es.push_back(eps);
      ds.push_back(row.output_distance);
    }
  }
  if (es.size() >= 3) report.slope = fit_order(es, ds).order;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& r : report.rows)
    if (r.ratio > 0.0) {
      lo = std::min(lo, r.ratio);
      hi = std::max(hi, r.ratio);
    }
  report.spread = hi > 0.0 ? hi / lo : 0.0;
  return report;
}

double smoothing_probe(const Solution& sol, double beta, double s, double t, double c) {
  const auto& u = sol.u;
  const auto& scale = *u.scale();
  const double alpha = u.alpha();
  const double slack = 1e-12 * std::max(1.0, std::abs(t));
  double top = 0.0, bottom = 0.0;
  for (std::size_t i = 0; i < u.points(); ++i) {
    const double ti = u.time(i);
    if (ti > t + slack) break;
    bottom = std::max(bottom, weighted_norm(scale, u.y(i), alpha));
    if (ti >= s - slack) top = std::max(top, weighted_norm(scale, u.y(i), alpha + beta));
  }
  return top * std::pow(s, beta) / (bottom + c);
}

void Solution::write_csv(std::ostream& os) const {
  const auto& scale = *u.scale();
  os << std::setprecision(17) << (scale.dimension() == 2 ? "t,k1,k2,re,im\n" : "t,k1,re,im\n");
  for (std::size_t i = 0; i < u.points(); ++i)
    for (std::size_t m = 0; m < scale.size(); ++m) {
      const Mode& k = scale.mode(m);
      const Complex v = u.y(i)[static_cast<Eigen::Index>(m)];
      os << u.time(i) << "," << k[0] << ",";
      if (scale.dimension() == 2) os << k[1] << ",";
      os << v.real() << "," << v.imag() << "\n";
    }
}

nlohmann::json Solution::manifest() const {
  nlohmann::json w = nlohmann::json::array();
  for (const auto& r : windows)
    w.push_back({{"first", r.first},
                 {"last", r.last},
                 {"iterations", r.iterations},
                 {"residual", r.residual},
                 {"restarts", r.restarts},
                 {"contraction", r.contraction}});
  return {{"tau", tau},
          {"last_index", last_index},
          {"blowup", blowup},
          {"converged", converged},
          {"diagnostic", diagnostic},
          {"initial_window", initial_window},
          {"alpha", u.alpha()},
          {"gamma", u.gamma()},
          {"gamma_prime", gamma_prime},
          {"windows", w}};
}

}  // namespace roughevo
