#include "experiments.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <random>

#include "builders.hpp"
#include "roughevo/controlled.hpp"
#include "roughevo/convergence.hpp"
#include "roughevo/convolution.hpp"
#include "roughevo/propagator.hpp"
#include "roughevo/roughpath.hpp"
#include "roughevo/rpde_solver.hpp"
#include "roughevo/sewing.hpp"
#include "roughevo/timebase.hpp"
#include "svg.hpp"

namespace roughevo::cli {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr const char* kVersion = "0.1.0";

struct Context {
  RunOptions options;
  std::optional<std::uint64_t> seed;
  std::map<std::string, double> metrics;
  nlohmann::json details = nlohmann::json::object();
  std::vector<std::string> files;

  void metric(const std::string& name, double value) { metrics[name] = value; }

  void write(const std::string& file, const std::function<void(std::ostream&)>& body) {
    if (options.out.empty()) return;
    std::ofstream os(options.out / file);
    body(os);
    files.push_back(file);
  }

  void plot(const std::string& file, const PlotSpec& spec, const std::vector<Series>& series) {
    if (options.out.empty() || !options.plots) return;
    write_svg_plot(options.out / file, spec, series);
    files.push_back(file);
  }
};

void write_table(Context& ctx, const std::string& file, const ConvergenceTable& table) {
  ctx.write(file, [&](std::ostream& os) { table.write_csv(os); });
}

nlohmann::json table_json(const ConvergenceTable& table) {
  return {{"h", table.resolutions()}, {"error", table.errors()}};
}

PropagatorOptions parse_propagator_options(const std::optional<Node>& node) {
  PropagatorOptions o;
  if (!node) return o;
  o.tol = node->number("tol", o.tol);
  o.max_level = static_cast<int>(node->integer("max_level", o.max_level));
  o.extrapolation = static_cast<int>(node->integer("extrapolation", o.extrapolation));
  o.beta = node->number("beta", o.beta);
  node->finish();
  return o;
}

SolveParams parse_params(const std::optional<Node>& node) {
  SolveParams p;
  if (!node) return p;
  p.alpha = node->number("alpha", p.alpha);
  p.gamma = node->number("gamma", p.gamma);
  p.gamma_prime = node->number("gamma_prime", p.gamma_prime);
  p.tol = node->number("tol", p.tol);
  p.max_iterations = static_cast<int>(node->integer("max_iterations", p.max_iterations));
  p.window_constant = node->number("window_constant", p.window_constant);
  p.min_window_cells = static_cast<std::size_t>(node->integer("min_window_cells", 8));
  p.blowup = node->number("blowup", p.blowup);
  p.max_restarts = static_cast<int>(node->integer("max_restarts", p.max_restarts));
  p.distance_points = static_cast<std::size_t>(node->integer("distance_points", 65));
  node->finish();
  return p;
}

std::pair<double, double> parse_interval(const Node& cfg) {
  if (!cfg.has("interval")) return {0.0, 1.0};
  const Node n = cfg.at("interval");
  const auto v = n.as_numbers();
  if (v.size() != 2 || !(v[1] > v[0])) n.fail("expected [start, end] with start < end");
  return {v[0], v[1]};
}

// ---------------------------------------------------------------------------------------------
// lift

void run_lift(const Node& cfg, Context& ctx) {
  const Partition grid = parse_grid(cfg.at("grid"));
  const Node paths = cfg.at("paths");
  const auto max_points = static_cast<std::size_t>(cfg.integer("max_points", 257));
  double chen = 0.0, geometric = 0.0;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const RoughPath rp = parse_driver(paths[i], grid, ctx.seed);
    const double c = chen_residual(rp, max_points);
    const bool is_geometric = rp.spec().kind != LiftKind::BrownianIto;
    const double g = geometric_defect(rp);
    chen = std::max(chen, c);
    if (is_geometric) geometric = std::max(geometric, g);
    rows.push_back({{"kind", to_string(rp.spec().kind)},
                    {"dimension", rp.dimension()},
                    {"gamma", rp.gamma()},
                    {"chen_residual", c},
                    {"geometric_defect", g},
                    {"first_level_seminorm", first_level_seminorm(rp, rp.gamma(), max_points).value},
                    {"second_level_seminorm", second_level_seminorm(rp, rp.gamma(), max_points).value}});
    ctx.write("path_" + std::to_string(i) + ".csv", [&](std::ostream& os) { write_roughpath_csv(os, rp); });
    if (i == 0 && ctx.options.plots) {
      Series s{"X^1", {}, {}};
      for (std::size_t j = 0; j < grid.size(); ++j) {
        s.x.push_back(grid[j]);
        s.y.push_back(rp.value(j, 0));
      }
      ctx.plot("path_0.svg", {"first component", "t", "X", false, false}, {s});
    }
  }
  ctx.details["paths"] = rows;
  ctx.metric("chen_residual", chen);
  ctx.metric("geometric_defect", geometric);
}

// ---------------------------------------------------------------------------------------------
// sew

// Composite Simpson rule with 2^16 panels; exact for cubic rates.
double simpson(const TimeFunction& f, double a, double b) {
  constexpr int n = 1 << 16;
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return acc * h / 3.0;
}

void run_sew(const Node& cfg, Context& ctx) {
  const auto [s, t] = parse_interval(cfg);
  const double z = cfg.number("z", 2.0);
  SewOptions opt;
  opt.tol = cfg.number("tol", 1e-12);
  opt.max_level = static_cast<int>(cfg.integer("max_level", 12));
  opt.extrapolation = static_cast<int>(cfg.integer("extrapolation", 0));
  const int order_from = static_cast<int>(cfg.integer("order_from_level", 4));
  const int order_to = static_cast<int>(cfg.integer("order_to_level", opt.max_level));
  const Control omega = control_linear(cfg.number("omega_constant", 1.0));
  const Node germ = cfg.at("germ");
  const std::string kind = germ.string("kind");
  std::vector<SewLevel> history, plain;
  if (kind == "scalar_exponential") {
    const TimeFunction rate = parse_function(germ.at("rate"));
    germ.finish();
    const ScalarMonoid m;
    const Germ<double> mu = [rate](double a, double b) { return std::exp(rate(a) * (b - a)); };
    const auto res = multiplicative_sew(m, mu, omega, z, s, t, opt);
    const double reference = std::exp(simpson(rate, s, t));
    ctx.metric("value", res.value);
    ctx.metric("reference", reference);
    ctx.metric("error", std::abs(res.value - reference));
    ctx.metric("level", res.level);
    ctx.metric("residual", res.residual);
    ctx.metric("converged", res.converged ? 1.0 : 0.0);
    history = res.history;
    SewOptions raw{0.0, order_to, 0};
    plain = multiplicative_sew(m, mu, omega, z, s, t, raw).history;
    const auto probe = maximal_inequality_probe(m, mu, omega, z, s, t, order_to);
    ctx.metric("maximal_ratio", probe.max_ratio);
    ctx.metric("maximal_factor", maximal_inequality_factor(z));
  } else if (kind == "propagator") {
    const ScalePtr scale = parse_scale(germ.at("scale"));
    const OperatorFamily family = parse_family(germ.at("family"), scale);
    germ.finish();
    PropagatorOptions po;
    po.tol = opt.tol;
    po.max_level = opt.max_level;
    po.extrapolation = opt.extrapolation;
    const auto res = sew_propagator(family, s, t, po);
    ctx.metric("level", res.level);
    ctx.metric("residual", res.residual);
    ctx.metric("converged", res.converged ? 1.0 : 0.0);
    ctx.metric("max_entry", max_entry(res.value));
    history = res.history;
    po.tol = 0.0;
    po.max_level = order_to;
    po.extrapolation = 0;
    plain = sew_propagator(family, s, t, po).history;
  } else {
    germ.at("kind").fail("unknown germ kind '" + kind + "'");
  }
  std::vector<double> h, e;
  for (const auto& lv : plain)
    if (lv.level >= order_from && lv.plain_residual > 0.0) {
      h.push_back(lv.mesh);
      e.push_back(lv.plain_residual);
    }
  if (h.size() >= 3) {
    const OrderFit fit = fit_order(h, e);
    ctx.metric("plain_order", fit.order);
    ctx.metric("plain_order_residual", fit.residual);
  }
  ctx.write("sew_history.csv", [&](std::ostream& os) { write_sew_history_csv(os, history); });
  ctx.write("sew_plain_history.csv", [&](std::ostream& os) { write_sew_history_csv(os, plain); });
  Series sp{"dyadic residual", {}, {}}, se{"extrapolated residual", {}, {}};
  for (const auto& lv : plain) sp.x.push_back(lv.mesh), sp.y.push_back(lv.plain_residual);
  for (const auto& lv : history) se.x.push_back(lv.mesh), se.y.push_back(lv.residual);
  ctx.plot("sew_residuals.svg", {"sewing residuals", "mesh", "residual", true, true}, {sp, se});
}

// ---------------------------------------------------------------------------------------------
// propagator

// Fundamental matrix of Phi' = L(t) Phi by classical RK4 with `substeps` steps per grid cell.
std::vector<CMatrix> rk4_fundamental(const OperatorFamily& family, const Partition& grid, int substeps) {
  const Eigen::Index n = static_cast<Eigen::Index>(family.scale()->size());
  const auto rhs = [&](double t, const CMatrix& phi) -> CMatrix { return family.at(t).to_dense() * phi; };
  std::vector<CMatrix> out{CMatrix::Identity(n, n)};
  CMatrix phi = out.front();
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double h = (grid[i + 1] - grid[i]) / substeps;
    for (int k = 0; k < substeps; ++k) {
      const double t = grid[i] + k * h;
      const CMatrix k1 = rhs(t, phi);
      const CMatrix k2 = rhs(t + 0.5 * h, phi + 0.5 * h * k1);
      const CMatrix k3 = rhs(t + 0.5 * h, phi + 0.5 * h * k2);
      const CMatrix k4 = rhs(t + h, phi + h * k3);
      phi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    out.push_back(phi);
  }
  return out;
}

// sup over tau in (0, T] of tau^sigma (1+|k|^2)^sigma exp(-nu |k|^2 tau), attained at tau = sigma / (nu |k|^2).
double mode_smoothing_oracle(double ksq, double nu, double sigma, double horizon) {
  const double tau = ksq > 0.0 ? std::min(horizon, sigma / (nu * ksq)) : horizon;
  return std::pow(tau, sigma) * std::pow(1.0 + ksq, sigma) * std::exp(-nu * ksq * tau);
}

void run_propagator(const Node& cfg, Context& ctx) {
  const ScalePtr scale = parse_scale(cfg.at("scale"));
  const OperatorFamily family = parse_family(cfg.at("family"), scale);
  const Partition grid = parse_grid(cfg.at("grid"));
  const PropagatorOptions po = parse_propagator_options(cfg.get("options"));
  const Propagator prop = build_propagator(family, grid, po);
  ctx.metric("max_cell_residual", prop.max_cell_residual());
  ctx.metric("max_cell_level", prop.max_cell_level());
  ctx.metric("converged", prop.converged() ? 1.0 : 0.0);

  if (auto p = cfg.get("probe")) {
    PropertyProbe probe;
    probe.alpha = p->number("alpha", probe.alpha);
    if (p->has("sigmas")) probe.sigmas = p->numbers("sigmas");
    probe.identity_sigma = p->number("identity_sigma", probe.identity_sigma);
    probe.max_points = static_cast<std::size_t>(p->integer("max_points", 65));
    p->finish();
    const PropertyReport r = verify_properties(prop, probe);
    ctx.details["properties"] = r.to_json();
    ctx.metric("cocycle_residual", r.cocycle_residual);
    ctx.metric("proximity_spread", r.proximity_spread);
    ctx.metric("proximity_max", r.proximity_max);
    ctx.metric("identity_proximity", r.identity_proximity);
    ctx.metric("derivative_order", r.derivative_order);
    double worst = 0.0;
    for (const auto& [sigma, ratio] : r.smoothing_ratios) worst = std::max(worst, ratio);
    ctx.metric("smoothing_ratio_max", worst);
  }

  if (auto r = cfg.get("rk4")) {
    const int substeps = static_cast<int>(r->integer("substeps", 64));
    r->finish();
    const auto reference = rk4_fundamental(family, grid, substeps);
    double err = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i)
      err = std::max(err, (prop.between(0, i).to_dense() - reference[i]).cwiseAbs().maxCoeff());
    ctx.metric("rk4_error", err);
  }

  if (auto o = cfg.get("smoothing_oracle")) {
    const double nu = o->number("nu", 1.0);
    const std::vector<double> sigmas = o->has("sigmas") ? o->numbers("sigmas") : std::vector<double>{0.25, 0.5, 1.0};
    const auto max_points = static_cast<std::size_t>(o->integer("max_points", 0));
    std::vector<Mode> modes;
    if (auto m = o->get("modes"))
      for (std::size_t i = 0; i < m->size(); ++i) {
        const auto v = (*m)[i].as_numbers();
        modes.push_back({static_cast<int>(v.at(0)), v.size() > 1 ? static_cast<int>(v[1]) : 0});
        if (scale->index_of(modes.back()) == SpectralScale::npos) (*m)[i].fail("mode outside the truncation");
      }
    o->finish();
    const double horizon = grid.horizon();
    double factor = 1.0;
    bool finite = true;
    nlohmann::json rows = nlohmann::json::array();
    for (double sigma : sigmas) {
      double oracle = 0.0;
      for (std::size_t m = 0; m < scale->size(); ++m)
        oracle = std::max(oracle, mode_smoothing_oracle(scale->symbol(m), nu, sigma, horizon));
      const double measured = smoothing_ratio(prop, sigma, 0.0, {}, max_points);
      finite = finite && std::isfinite(measured);
      factor = std::max({factor, oracle / measured, measured / oracle});
      rows.push_back({{"sigma", sigma}, {"mode", nullptr}, {"measured", measured}, {"oracle", oracle}});
      for (const Mode& k : modes) {
        const std::size_t idx = scale->index_of(k);
        const CVector x = GalerkinVector::mode(scale, k).coefficients();
        const double mo = mode_smoothing_oracle(scale->symbol(idx), nu, sigma, horizon);
        const double mm = smoothing_ratio(prop, sigma, 0.0, x, max_points);
        finite = finite && std::isfinite(mm);
        factor = std::max({factor, mo / mm, mm / mo});
        rows.push_back({{"sigma", sigma}, {"mode", k}, {"measured", mm}, {"oracle", mo}});
      }
    }
    ctx.details["smoothing"] = rows;
    ctx.metric("smoothing_factor", factor);
    ctx.metric("smoothing_finite", finite ? 1.0 : 0.0);
  }
}

// ---------------------------------------------------------------------------------------------
// splitting

OperatorFamily parse_split_term(const Node& node) {
  const CMatrix m = parse_matrix(node);
  if (m.rows() != m.cols()) node.fail("generator must be square");
  return OperatorFamily::constant(SpectralScale::flat(static_cast<std::size_t>(m.rows())), LinearOp::dense(m));
}

void run_splitting(const Node& cfg, Context& ctx) {
  const OperatorFamily a = parse_split_term(cfg.at("a"));
  const OperatorFamily b = parse_split_term(cfg.at("b"));
  if (a.scale()->size() != b.scale()->size()) cfg.fail("generators a and b have different sizes");
  const auto [s, t] = parse_interval(cfg);
  const PropagatorOptions po = parse_propagator_options(cfg.get("options"));
  std::vector<double> steps = cfg.numbers("steps");
  if (steps.size() < 3) cfg.at("steps").fail("need at least three step counts");
  ConvergenceTable lie, strang_table;
  for (double n : steps) {
    const int k = static_cast<int>(n);
    lie.add((t - s) / k, lie_trotter(a, b, s, t, k, po).max_entry_error);
    strang_table.add((t - s) / k, strang(a, b, s, t, k, po).max_entry_error);
  }
  const OrderFit fl = lie.fit(), fs = strang_table.fit();
  ctx.metric("lie_order", fl.order);
  ctx.metric("strang_order", fs.order);
  const SplitResult one = lie_trotter(a, b, s, t, 1, po);
  ctx.metric("lie_n1_entry", std::abs(one.difference(0, 0)));
  ctx.metric("lie_n1_max_entry", one.max_entry_error);
  ctx.details["lie_trotter"] = table_json(lie);
  ctx.details["strang"] = table_json(strang_table);
  write_table(ctx, "convergence_lie_trotter.csv", lie);
  write_table(ctx, "convergence_strang.csv", strang_table);
  ctx.plot("splitting.svg", {"splitting error", "step", "max-entry error", true, true},
           {{"Lie-Trotter", lie.resolutions(), lie.errors()}, {"Strang", strang_table.resolutions(), strang_table.errors()}});
}

// ---------------------------------------------------------------------------------------------
// convolve

// y_i = S_{t_i, t_0} a + (X^1_{t_i} - X^1_{t_0}) b with y' = (b, 0, ...).
ControlledPath linear_integrand(const Propagator& prop, const RoughPathPtr& x, const ScalePtr& scale,
                                const CVector& a, const CVector& b, std::size_t first, std::size_t last, double alpha) {
  std::vector<CVector> y;
  std::vector<std::vector<CVector>> yp;
  const std::size_t d = x->dimension();
  for (std::size_t i = first; i <= last; ++i) {
    y.push_back(prop.between(first, i).apply(a) + x->increment(first, i, 0) * b);
    std::vector<CVector> comps(d, CVector::Zero(b.size()));
    comps[0] = b;
    yp.push_back(std::move(comps));
  }
  return ControlledPath(x, scale, first, std::move(y), std::move(yp), alpha, x->gamma());
}

CVector random_vector(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> normal;
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = Complex(normal(rng), normal(rng));
  return v;
}

void run_properties(const Node& p, Context& ctx) {
  const auto samples = static_cast<int>(p.integer("samples", 100));
  std::mt19937_64 rng(static_cast<std::uint64_t>(p.integer("seed", ctx.seed ? static_cast<std::int64_t>(*ctx.seed) : 7)));
  p.finish();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal;

  // Superadditivity of linear, p-variation, sum and product-power controls, relative to omega(0, 1).
  const Partition grid = Partition::dyadic(0.0, 1.0, 5);
  double super = -kInf;
  for (int k = 0; k < samples; ++k) {
    std::vector<double> walk{0.0};
    for (std::size_t i = 1; i < grid.size(); ++i) walk.push_back(walk.back() + normal(rng));
    const double pexp = 1.0 + 2.0 * unit(rng);
    const Control lin = control_linear(0.1 + unit(rng));
    const Control pv = control_pvar(grid, [&](std::size_t i, std::size_t j) { return std::abs(walk[j] - walk[i]); }, pexp);
    const double w = unit(rng);
    for (const Control& c :
         {lin, pv, control_sum(lin, pv), control_product_power(lin, w, pv, 1.0 - w + 0.1 * unit(rng))})
      super = std::max(super, superadditivity_defect(c, grid) / (1.0 + c(grid.front(), grid.back())));
  }
  ctx.metric("superadditivity_defect", super);

  // Interpolation inequality on random coefficient tables.
  const ScalePtr torus = SpectralScale::torus(1, 8);
  double interp = -kInf;
  for (int k = 0; k < samples; ++k) {
    const GalerkinVector v(torus, random_vector(rng, static_cast<Eigen::Index>(torus->size())));
    double lv[3] = {-1.0 + 3.0 * unit(rng), -1.0 + 3.0 * unit(rng), -1.0 + 3.0 * unit(rng)};
    std::sort(lv, lv + 3);
    if (lv[1] - lv[0] < 1e-3 || lv[2] - lv[1] < 1e-3) lv[2] = lv[1] + 0.5, lv[0] = lv[1] - 0.5;
    interp = std::max(interp, interpolation_check(v, lv[0], lv[1], lv[2]));
  }
  ctx.metric("interpolation_residual", interp);

  // Right distributivity (x a + y b) c = x (a c) + y (b c) in the affine monoid.
  const ScalePtr small = SpectralScale::torus(1, 4);
  const auto n = static_cast<Eigen::Index>(small->size());
  const AffineMonoid monoid(small, 0.0);
  const auto random_element = [&]() {
    return AffineElement{LinearOp::dense(CMatrix::Random(n, n)), random_vector(rng, n)};
  };
  double distributivity = 0.0;
  for (int k = 0; k < samples; ++k) {
    const AffineElement a = random_element(), b = random_element(), c = random_element();
    const double x = normal(rng), y = normal(rng);
    const AffineElement lhs = monoid.compose(monoid.combine(a, x, b, y), c);
    const AffineElement rhs = monoid.combine(monoid.compose(a, c), x, monoid.compose(b, c), y);
    distributivity = std::max(distributivity, monoid.distance(lhs, rhs) / monoid.size(lhs));
  }
  ctx.metric("affine_distributivity", distributivity);

  // Time additivity and linearity of the rough convolution.
  const Partition cgrid = Partition::dyadic(0.0, 1.0, 6);
  const Propagator prop = build_propagator(heat_family(small, [](double t) { return 1.0 + 0.5 * t; }), cgrid);
  const auto path = [](double t) {
    Eigen::VectorXd v(1);
    v << std::sin(3.0 * t) + std::cos(2.0 * t) * t;
    return v;
  };
  const RoughPathPtr x = std::make_shared<RoughPath>(lift_smooth(path, cgrid, 8, 0.45));
  const int conv_samples = std::max(1, samples / 10);
  double additivity = 0.0, linearity = 0.0;
  for (int k = 0; k < conv_samples; ++k) {
    const CVector a = random_vector(rng, n), b = random_vector(rng, n);
    const ControlledPath y = linear_integrand(prop, x, small, a, b, 0, cgrid.cells(), 0.0);
    const ControlledPath z = rough_convolve(prop, y);
    const std::size_t u = 1 + static_cast<std::size_t>(unit(rng) * static_cast<double>(cgrid.cells() - 2));
    std::vector<CVector> ys;
    std::vector<std::vector<CVector>> yps;
    for (std::size_t i = u; i < y.points(); ++i) {
      ys.push_back(y.y(i));
      yps.push_back({y.yprime(i, 0)});
    }
    const ControlledPath tail(x, small, u, ys, yps, 0.0, x->gamma());
    const ControlledPath zt = rough_convolve(prop, tail);
    for (std::size_t j = u; j < z.points(); ++j) {
      const CVector expect = prop.between(u, j).apply(z.y(u)) + zt.y(j - u);
      additivity = std::max(additivity, (z.y(j) - expect).cwiseAbs().maxCoeff() / (1.0 + z.y(j).cwiseAbs().maxCoeff()));
    }
    // Random (not necessarily controlled) pairs: the convolution is linear in (y, y').
    std::vector<CVector> y1, y2;
    std::vector<std::vector<CVector>> p1, p2;
    for (std::size_t i = 0; i < cgrid.size(); ++i) {
      y1.push_back(random_vector(rng, n));
      y2.push_back(random_vector(rng, n));
      p1.push_back({random_vector(rng, n)});
      p2.push_back({random_vector(rng, n)});
    }
    const double c = normal(rng);
    std::vector<CVector> ysum;
    std::vector<std::vector<CVector>> psum;
    for (std::size_t i = 0; i < cgrid.size(); ++i) {
      ysum.push_back(y1[i] + c * y2[i]);
      psum.push_back({p1[i][0] + c * p2[i][0]});
    }
    const ControlledPath z1 = rough_convolve(prop, ControlledPath(x, small, 0, y1, p1, 0.0, 0.45));
    const ControlledPath z2 = rough_convolve(prop, ControlledPath(x, small, 0, y2, p2, 0.0, 0.45));
    const ControlledPath zs = rough_convolve(prop, ControlledPath(x, small, 0, ysum, psum, 0.0, 0.45));
    for (std::size_t i = 0; i < cgrid.size(); ++i)
      linearity = std::max(linearity, (zs.y(i) - z1.y(i) - c * z2.y(i)).cwiseAbs().maxCoeff() /
                                          (1.0 + zs.y(i).cwiseAbs().maxCoeff()));
  }
  ctx.metric("convolution_additivity", additivity);
  ctx.metric("convolution_linearity", linearity);
}

void run_convolve(const Node& cfg, Context& ctx) {
  if (auto ito = cfg.get("ito_square")) {
    const Partition grid = parse_grid(ito->at("grid"));
    const RoughPathPtr b = std::make_shared<RoughPath>(parse_driver(ito->at("driver"), grid, ctx.seed));
    ito->finish();
    if (b->dimension() != 1) ito->fail("the square identity needs a one-dimensional driver");
    const ScalePtr flat = SpectralScale::flat(1);
    const Propagator id = build_propagator(OperatorFamily::constant(flat, LinearOp::zero(1)), grid);
    std::vector<CVector> y;
    std::vector<std::vector<CVector>> yp;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      y.push_back(CVector::Constant(1, b->increment(0, i, 0)));
      yp.push_back({CVector::Constant(1, 1.0)});
    }
    const ControlledPath z = rough_convolve(id, ControlledPath(b, flat, 0, y, yp, 0.0, b->gamma()));
    double err = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double bt = b->increment(0, i, 0);
      err = std::max(err, std::abs(z.y(i)[0] - 0.5 * (bt * bt - (grid[i] - grid[0]))));
    }
    ctx.metric("ito_square_error", err);
    ctx.write("ito_square.csv", [&](std::ostream& os) { write_controlled_csv(os, z); });
  }
  if (auto le = cfg.get("local_expansion")) {
    const ScalePtr scale = parse_scale(le->at("scale"));
    const OperatorFamily family = parse_family(le->at("family"), scale);
    const Partition grid = parse_grid(le->at("grid"));
    const RoughPathPtr x = std::make_shared<RoughPath>(parse_driver(le->at("driver"), grid, ctx.seed));
    const CVector a = parse_vector(le->at("a"), scale).coefficients();
    const CVector b = parse_vector(le->at("b"), scale).coefficients();
    const double beta = le->number("beta", 0.0);
    const auto max_points = static_cast<std::size_t>(le->integer("max_points", 129));
    const PropagatorOptions po = parse_propagator_options(le->get("options"));
    const double alpha = le->number("alpha", 0.0);
    le->finish();
    const Propagator prop = build_propagator(family, grid, po);
    const ControlledPath y = linear_integrand(prop, x, scale, a, b, 0, grid.cells(), alpha);
    const ControlledPath z = rough_convolve(prop, y);
    const LocalExpansion r = local_expansion(prop, Integrand{y}, z, beta, max_points);
    ctx.metric("local_expansion_slope", r.slope);
    ctx.metric("local_expansion_sup_ratio", r.sup_ratio);
    ctx.details["local_expansion"] = {{"lengths", r.lengths}, {"defects", r.defects}, {"gamma", x->gamma()}};
    ctx.plot("local_expansion.svg", {"local expansion defect", "t - s", "defect", true, true},
             {{"defect", r.lengths, r.defects}});
  }
  if (auto p = cfg.get("properties")) run_properties(*p, ctx);
}

// ---------------------------------------------------------------------------------------------
// problems (solve, convergence, stability)

struct Setup {
  ScalePtr scale;
  std::optional<OperatorFamily> family;
  PropagatorOptions propagator;
  NonlinearityPtr drift;
  std::vector<NonlinearityPtr> diffusion;
  GalerkinVector initial;
  SolveParams params;
  std::optional<Node> driver;
};

Setup parse_setup(const Node& cfg) {
  Setup s;
  s.scale = parse_scale(cfg.at("scale"));
  s.family = parse_family(cfg.at("family"), s.scale);
  s.propagator = parse_propagator_options(cfg.get("propagator"));
  s.drift = cfg.has("drift") ? parse_nonlinearity(cfg.at("drift"), s.scale) : std::make_shared<ZeroNonlinearity>(s.scale);
  const Node diff = cfg.at("diffusion");
  for (std::size_t i = 0; i < diff.size(); ++i) s.diffusion.push_back(parse_nonlinearity(diff[i], s.scale));
  s.initial = parse_vector(cfg.at("initial"), s.scale);
  s.params = parse_params(cfg.get("params"));
  s.driver = cfg.at("driver");
  return s;
}

RpdeProblem make_problem(const Setup& s, const Propagator& prop, RoughPathPtr driver) {
  return RpdeProblem{&prop, s.drift, s.diffusion, s.initial, std::move(driver)};
}

/// Per-mode closed form x_k exp((l_k + n_k) t + c_k X_t - [Ito] c_k^2 t / 2) for a constant diagonal
/// generator with multiplier drift and diffusion over a one-dimensional driver.
class LinearOracle {
public:
  LinearOracle(const Node& where, const Setup& s) {
    const LinearOp l0 = s.family->at(0.0);
    if (!l0.is_diagonal()) where.fail("closed form needs a diagonal generator");
    for (double t : {0.25, 0.5, 1.0}) {
      const LinearOp lt = s.family->at(t);
      if (!lt.is_diagonal() || (lt.diagonal_entries() - l0.diagonal_entries()).cwiseAbs().maxCoeff() > 0.0)
        where.fail("closed form needs a time-independent generator");
    }
    lambda_ = l0.diagonal_entries();
    drift_ = CVector::Zero(lambda_.size());
    if (!s.drift->is_zero()) {
      const auto* m = dynamic_cast<const MultiplierNonlinearity*>(s.drift.get());
      if (!m) where.fail("closed form needs a multiplier drift");
      drift_ = m->multiplier();
    }
    if (s.diffusion.size() != 1) where.fail("closed form needs a one-dimensional driver");
    const auto* f = dynamic_cast<const MultiplierNonlinearity*>(s.diffusion[0].get());
    if (!f) where.fail("closed form needs a multiplier diffusion");
    c_ = f->multiplier();
    x_ = s.initial.coefficients();
  }

  CVector operator()(const RoughPath& driver, std::size_t i) const {
    const double t = driver.grid()[i] - driver.grid()[0];
    const double xt = driver.increment(0, i, 0);
    const bool ito = driver.spec().kind == LiftKind::BrownianIto;
    CVector out(x_.size());
    for (Eigen::Index k = 0; k < x_.size(); ++k) {
      Complex e = (lambda_[k] + drift_[k]) * t + c_[k] * xt;
      if (ito) e -= 0.5 * c_[k] * c_[k] * t;
      out[k] = x_[k] * std::exp(e);
    }
    return out;
  }

private:
  CVector lambda_, drift_, c_, x_;
};

struct OracleErrors {
  double final_abs = 0.0;
  double max_abs = 0.0;
  double max_relative = 0.0;
};

OracleErrors oracle_errors(const LinearOracle& oracle, const Solution& sol) {
  OracleErrors e;
  const auto& u = sol.u;
  for (std::size_t i = 0; i < u.points(); ++i) {
    const CVector ex = oracle(u.driver(), i);
    for (Eigen::Index k = 0; k < ex.size(); ++k) {
      const double d = std::abs(u.y(i)[k] - ex[k]);
      e.max_abs = std::max(e.max_abs, d);
      if (std::abs(ex[k]) > 0.0) e.max_relative = std::max(e.max_relative, d / std::abs(ex[k]));
      if (i + 1 == u.points()) e.final_abs = std::max(e.final_abs, d);
    }
  }
  return e;
}

// u_{i+1} = u_i + h (L_{t_i} u_i + N(u_i)) + sum_a F_a(u_i) dX^a on the solution's grid.
std::vector<CVector> euler_maruyama(const RpdeProblem& p, std::size_t points) {
  const auto& grid = p.driver->grid();
  const auto& scale = p.initial.scale();
  std::vector<CVector> u{p.initial.coefficients()};
  for (std::size_t i = 0; i + 1 < points; ++i) {
    const GalerkinVector v(scale, u.back());
    const double h = grid[i + 1] - grid[i];
    CVector next = u.back() + h * p.propagator->family().at(grid[i]).apply(u.back());
    if (p.drift) next += h * p.drift->apply(v).coefficients();
    for (std::size_t a = 0; a < p.diffusion.size(); ++a)
      next += p.driver->increment(i, i + 1, a) * p.diffusion[a]->apply(v).coefficients();
    u.push_back(std::move(next));
  }
  return u;
}

Solution checked_solve(const RpdeProblem& p, const SolveParams& params) {
  Solution sol = picard_solve(p, params);
  if (!sol.converged) throw std::runtime_error("solver: " + sol.diagnostic);
  return sol;
}

void record_solution(Context& ctx, const RpdeProblem& p, const Solution& sol) {
  const auto& u = sol.u;
  double picard = 0.0, contraction = 0.0, consistency = 0.0, symmetry = 0.0;
  int iterations = 0;
  for (const auto& w : sol.windows) {
    picard = std::max(picard, w.residual);
    iterations = std::max(iterations, w.iterations);
    if (!w.contraction.empty()) contraction = std::max(contraction, w.contraction.front());
  }
  for (std::size_t i = 0; i < u.points(); ++i) {
    for (std::size_t a = 0; a < p.diffusion.size(); ++a)
      consistency = std::max(consistency,
                             (u.yprime(i, a) - p.diffusion[a]->apply(u.value(i)).coefficients()).cwiseAbs().maxCoeff());
    if (!u.scale()->is_flat()) symmetry = std::max(symmetry, conjugate_symmetry_defect(u.value(i)));
  }
  ctx.metric("converged", sol.converged ? 1.0 : 0.0);
  ctx.metric("blowup", sol.blowup ? 1.0 : 0.0);
  ctx.metric("tau", sol.tau);
  ctx.metric("windows", static_cast<double>(sol.windows.size()));
  ctx.metric("picard_residual_max", picard);
  ctx.metric("picard_iterations_max", iterations);
  ctx.metric("first_contraction_max", contraction);
  ctx.metric("derivative_consistency", consistency);
  ctx.metric("conjugate_symmetry_defect", symmetry);
  ctx.details["solution"] = sol.manifest();
}

void run_solve(const Node& cfg, Context& ctx) {
  const Setup s = parse_setup(cfg);
  const Partition grid = parse_grid(cfg.at("grid"));
  const RoughPathPtr driver = std::make_shared<RoughPath>(parse_driver(*s.driver, grid, ctx.seed));
  std::optional<LinearOracle> oracle;
  if (auto r = cfg.get("reference")) {
    if (r->string("kind") != "linear_exponential") r->at("kind").fail("unknown reference kind");
    r->finish();
    oracle.emplace(*r, s);
  }
  std::optional<GalerkinVector> phi;
  if (auto w = cfg.get("weak")) {
    phi = parse_vector(w->at("phi"), s.scale);
    w->finish();
  }
  std::optional<Node> smoothing = cfg.get("smoothing");

  const Propagator prop = build_propagator(*s.family, grid, s.propagator);
  const RpdeProblem p = make_problem(s, prop, driver);
  validate(p, s.params);
  const Solution sol = picard_solve(p, s.params);
  record_solution(ctx, p, sol);
  if (!sol.diagnostic.empty()) ctx.details["diagnostic"] = sol.diagnostic;
  const auto& u = sol.u;
  ctx.metric("u_final_norm", weighted_norm(*s.scale, u.y(u.points() - 1), u.alpha()));
  if (s.scale->size() == 1) {
    ctx.metric("u_final_re", u.y(u.points() - 1)[0].real());
    ctx.metric("u_final_im", u.y(u.points() - 1)[0].imag());
  }
  if (oracle) {
    const OracleErrors e = oracle_errors(*oracle, sol);
    ctx.metric("final_error", e.final_abs);
    ctx.metric("max_abs_error", e.max_abs);
    ctx.metric("max_relative_error", e.max_relative);
  }
  if (phi) {
    const auto r = weak_residual(p, sol, *phi);
    ctx.metric("weak_residual_max", *std::max_element(r.begin(), r.end()));
  }
  if (smoothing) {
    const std::vector<double> betas = smoothing->numbers("betas");
    const std::vector<double> starts = smoothing->numbers("s");
    const double t = smoothing->number("t", sol.tau);
    const double c = smoothing->number("c", 1.0);
    smoothing->finish();
    double worst = 0.0;
    nlohmann::json rows = nlohmann::json::array();
    for (double beta : betas)
      for (double s0 : starts) {
        const double r = smoothing_probe(sol, beta, s0, t, c);
        worst = std::max(worst, r);
        rows.push_back({{"beta", beta}, {"s", s0}, {"ratio", r}});
      }
    ctx.details["smoothing"] = rows;
    ctx.metric("smoothing_ratio_max", worst);
  }
  ctx.write("solution.csv", [&](std::ostream& os) { sol.write_csv(os); });
  if (ctx.options.plots) {
    std::vector<Series> series;
    for (std::size_t m = 0; m < std::min<std::size_t>(s.scale->size(), 5); ++m) {
      Series ser{"mode " + std::to_string(s.scale->mode(m)[0]), {}, {}};
      for (std::size_t i = 0; i < u.points(); ++i) {
        ser.x.push_back(u.time(i));
        ser.y.push_back(std::abs(u.y(i)[static_cast<Eigen::Index>(m)]));
      }
      series.push_back(std::move(ser));
    }
    ctx.plot("solution.svg", {"solution modes", "t", "|u_k|", false, false}, series);
  }
}

bool stochastic(const Node& driver) {
  const std::string kind = driver.raw().value("kind", "");
  return kind == "brownian" || kind == "fbm";
}

void run_convergence(const Node& cfg, Context& ctx) {
  const Setup s = parse_setup(cfg);
  const auto [t0, t1] = parse_interval(cfg);
  std::vector<int> levels;
  for (double l : cfg.numbers("levels")) levels.push_back(static_cast<int>(l));
  if (levels.size() < 3) cfg.at("levels").fail("need at least three levels");
  std::sort(levels.begin(), levels.end());
  const std::string quantity = cfg.string("quantity");
  const bool restrict = cfg.boolean("shared_propagator", true);
  const int fine_level = static_cast<int>(cfg.integer("fine_level", levels.back()));
  if (fine_level < levels.back()) cfg.at("fine_level").fail("fine level must be at least the finest level");
  std::optional<LinearOracle> oracle;
  std::optional<GalerkinVector> phi;
  if (quantity == "closed_form") {
    oracle.emplace(cfg, s);
  } else if (quantity == "weak_residual") {
    phi = parse_vector(cfg.at("phi"), s.scale);
  } else if (quantity != "euler_maruyama") {
    cfg.at("quantity").fail("expected closed_form, weak_residual or euler_maruyama");
  }
  std::optional<Propagator> fine;
  if (restrict) fine.emplace(build_propagator(*s.family, Partition::dyadic(t0, t1, levels.back()), s.propagator));
  ConvergenceTable table;
  nlohmann::json rows = nlohmann::json::array();
  for (int level : levels) {
    const Partition grid = Partition::dyadic(t0, t1, level);
    const std::optional<int> refine =
        stochastic(*s.driver) ? std::optional<int>(1 << (fine_level - level)) : std::nullopt;
    const RoughPathPtr driver = std::make_shared<RoughPath>(parse_driver(*s.driver, grid, ctx.seed, refine));
    const Propagator prop = fine ? fine->restrict_to(grid) : build_propagator(*s.family, grid, s.propagator);
    const RpdeProblem p = make_problem(s, prop, driver);
    validate(p, s.params);
    const Solution sol = checked_solve(p, s.params);
    double err = 0.0;
    if (oracle) {
      err = oracle_errors(*oracle, sol).max_relative;
    } else if (phi) {
      const auto r = weak_residual(p, sol, *phi);
      err = *std::max_element(r.begin(), r.end());
    } else {
      const auto em = euler_maruyama(p, sol.u.points());
      for (std::size_t i = 0; i < em.size(); ++i) err = std::max(err, (sol.u.y(i) - em[i]).cwiseAbs().maxCoeff());
    }
    table.add(grid.mesh(), err);
    rows.push_back({{"level", level}, {"h", grid.mesh()}, {"error", err}, {"windows", sol.windows.size()}});
  }
  const OrderFit fit = table.fit();
  ctx.metric("order", fit.order);
  ctx.metric("order_residual", fit.residual);
  ctx.metric("final_error", table.errors().back());
  ctx.metric("first_error", table.errors().front());
  ctx.metric("monotone", table.monotone() ? 1.0 : 0.0);
  ctx.details["levels"] = rows;
  write_table(ctx, "convergence.csv", table);
  ctx.plot("convergence.svg", {"refinement study: " + quantity, "h", "error", true, true},
           {{quantity, table.resolutions(), table.errors()}});
}

void write_stability(Context& ctx, const std::string& file, const StabilityReport& r) {
  ctx.write(file, [&](std::ostream& os) {
    os << std::setprecision(17) << "epsilon,input_distance,output_distance,ratio\n";
    for (const auto& row : r.rows)
      os << row.epsilon << "," << row.input_distance << "," << row.output_distance << "," << row.ratio << "\n";
  });
}

nlohmann::json stability_json(const StabilityReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"epsilon", row.epsilon},
                    {"input_distance", row.input_distance},
                    {"output_distance", row.output_distance},
                    {"ratio", row.ratio}});
  return {{"rows", rows}, {"slope", r.slope}, {"spread", r.spread}};
}

void run_stability(const Node& cfg, Context& ctx) {
  const Setup s = parse_setup(cfg);
  const Partition grid = parse_grid(cfg.at("grid"));
  const RoughPathPtr driver = std::make_shared<RoughPath>(parse_driver(*s.driver, grid, ctx.seed));
  const Node pert = cfg.at("perturbation");
  const std::vector<double> eps = pert.numbers("epsilons");
  const Propagator prop = build_propagator(*s.family, grid, s.propagator);
  const RpdeProblem p = make_problem(s, prop, driver);
  validate(p, s.params);
  if (auto h = pert.get("initial")) {
    const GalerkinVector dir = parse_vector(*h, s.scale);
    const StabilityReport r = stability_experiment(p, s.params, dir, {}, eps);
    ctx.metric("initial_slope", r.slope);
    ctx.metric("initial_spread", r.spread);
    ctx.details["initial"] = stability_json(r);
    write_stability(ctx, "stability_initial.csv", r);
  }
  if (auto g = pert.get("driver")) {
    if (s.driver->string("kind") != "smooth") s.driver->fail("driver perturbations need a smooth driver");
    const auto base = parse_components(s.driver->at("components"));
    const auto extra = parse_components(*g);
    if (extra.size() != base.size()) g->fail("need one perturbation per driver component");
    const int refine = static_cast<int>(s.driver->integer("refine", 1));
    const double gamma = s.driver->number("gamma", 0.5);
    const auto perturbed = [&](double e) {
      const auto path = [&, e](double t) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(base.size()));
        for (std::size_t c = 0; c < base.size(); ++c) v[static_cast<Eigen::Index>(c)] = base[c](t) + e * extra[c](t);
        return v;
      };
      return std::make_shared<const RoughPath>(lift_smooth(path, grid, refine, gamma));
    };
    const StabilityReport r = stability_experiment(p, s.params, GalerkinVector{}, perturbed, eps);
    ctx.metric("driver_slope", r.slope);
    ctx.metric("driver_spread", r.spread);
    ctx.details["driver"] = stability_json(r);
    write_stability(ctx, "stability_driver.csv", r);
  }
  pert.finish();
}

// ---------------------------------------------------------------------------------------------

std::vector<Check> parse_acceptance(const Node& node, const std::map<std::string, double>& metrics) {
  std::vector<Check> out;
  for (auto it = node.raw().begin(); it != node.raw().end(); ++it) {
    const Node bound = node.at(it.key());
    Check c;
    c.name = it.key();
    c.lower = -kInf;
    c.upper = kInf;
    if (bound.is_number()) {
      c.upper = bound.as_number();
    } else if (bound.is_array()) {
      const auto v = bound.as_numbers();
      if (v.size() != 2) bound.fail("expected [lower, upper]");
      c.lower = v[0];
      c.upper = v[1];
    } else {
      c.lower = bound.number("min", -kInf);
      c.upper = bound.number("max", kInf);
      bound.finish();
    }
    auto m = metrics.find(c.name);
    if (m == metrics.end()) bound.fail("the experiment reports no metric of this name");
    c.value = m->second;
    out.push_back(c);
  }
  return out;
}

}  // namespace

bool RunResult::passed() const {
  for (const auto& c : checks)
    if (!c.pass()) return false;
  return true;
}

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds = {"lift",     "sew",   "propagator", "splitting",
                                                 "convolve", "solve", "stability",  "convergence"};
  return kinds;
}

RunResult run_experiment(const std::string& kind, const nlohmann::json& config, const RunOptions& options) {
  const Node cfg(config, "config");
  if (!cfg.is_object()) cfg.fail("expected an object");
  if (cfg.has("experiment") && cfg.string("experiment") != kind)
    cfg.at("experiment").fail("config is for '" + cfg.string("experiment") + "', not '" + kind + "'");
  Context ctx;
  ctx.options = options;
  ctx.seed = options.seed;
  if (!ctx.seed && cfg.has("seed")) {
    const auto v = cfg.integer("seed");
    if (v < 0) cfg.at("seed").fail("seed must be nonnegative");
    ctx.seed = static_cast<std::uint64_t>(v);
  }
  cfg.touch("seed");
  RunResult result;
  result.kind = kind;
  result.name = cfg.string("name", kind);
  const std::string description = cfg.string("description", "");
  const std::int64_t criterion = cfg.integer("criterion", 0);
  if (!options.out.empty()) std::filesystem::create_directories(options.out);

  const auto start = std::chrono::steady_clock::now();
  try {
    if (kind == "lift") run_lift(cfg, ctx);
    else if (kind == "sew") run_sew(cfg, ctx);
    else if (kind == "propagator") run_propagator(cfg, ctx);
    else if (kind == "splitting") run_splitting(cfg, ctx);
    else if (kind == "convolve") run_convolve(cfg, ctx);
    else if (kind == "solve") run_solve(cfg, ctx);
    else if (kind == "stability") run_stability(cfg, ctx);
    else if (kind == "convergence") run_convergence(cfg, ctx);
    else throw ConfigError("experiment kind '" + kind + "' is unknown");
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (auto acc = cfg.get("acceptance")) result.checks = parse_acceptance(*acc, ctx.metrics);
  cfg.finish();

  result.metrics = ctx.metrics;
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : result.checks)
    checks.push_back({{"name", c.name},
                      {"value", c.value},
                      {"lower", c.lower},
                      {"upper", c.upper},
                      {"pass", c.pass()}});
  nlohmann::json manifest = {
      {"experiment", kind},
      {"name", result.name},
      {"config", config},
      {"seed", ctx.seed ? nlohmann::json(*ctx.seed) : nlohmann::json(nullptr)},
      {"versions",
       {{"roughevo", kVersion},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)}}},
      {"metrics", ctx.metrics},
      {"checks", checks},
      {"pass", result.passed()},
      {"details", ctx.details},
      {"files", ctx.files},
  };
  if (!description.empty()) manifest["description"] = description;
  if (criterion > 0) manifest["criterion"] = criterion;
  if (options.timings) manifest["timings"] = {{"seconds", seconds}};
  result.manifest = manifest;
  if (!options.out.empty()) {
    std::ofstream os(options.out / "manifest.json");
    os << manifest.dump(2) << "\n";
  }
  return result;
}

}  // namespace roughevo::cli
