#include "builders.hpp"

#include <cmath>
#include <fstream>
#include <random>

namespace roughevo::cli {

double TimeFunction::operator()(double t) const {
  double acc = 0.0, power = 1.0;
  for (double c : poly) {
    acc += c * power;
    power *= t;
  }
  for (const auto& w : sines) acc += w.amplitude * std::sin(w.frequency * t + w.phase);
  for (const auto& w : cosines) acc += w.amplitude * std::cos(w.frequency * t + w.phase);
  for (const auto& k : kinks) acc += k.amplitude * std::pow(std::abs(t - k.center), k.exponent);
  return acc;
}

namespace {

std::vector<TimeFunction::Wave> parse_waves(const Node& node) {
  std::vector<TimeFunction::Wave> out;
  for (std::size_t i = 0; i < node.size(); ++i) {
    const auto v = node[i].as_numbers();
    if (v.size() < 2 || v.size() > 3) node[i].fail("expected [amplitude, frequency(, phase)]");
    out.push_back({v[0], v[1], v.size() == 3 ? v[2] : 0.0});
  }
  return out;
}

Mode parse_mode(const Node& node, const SpectralScale& scale) {
  const auto v = node.as_numbers();
  const std::size_t need = scale.is_flat() ? 1 : static_cast<std::size_t>(scale.dimension());
  if (v.size() != need) node.fail("mode needs " + std::to_string(need) + " entries");
  Mode k{static_cast<int>(v[0]), v.size() > 1 ? static_cast<int>(v[1]) : 0};
  if (scale.index_of(k) == SpectralScale::npos) node.fail("mode lies outside the truncation");
  return k;
}

Mode negate(const Mode& k, const SpectralScale& scale) { return scale.is_flat() ? k : Mode{-k[0], -k[1]}; }

}  // namespace

TimeFunction parse_function(const Node& node) {
  if (node.is_number()) return TimeFunction::constant(node.as_number());
  if (!node.is_object()) node.fail("expected a number or a function object");
  TimeFunction f;
  if (auto p = node.get("poly")) f.poly = p->as_numbers();
  if (auto s = node.get("sin")) f.sines = parse_waves(*s);
  if (auto c = node.get("cos")) f.cosines = parse_waves(*c);
  if (auto h = node.get("holder")) {
    for (std::size_t i = 0; i < h->size(); ++i) {
      const auto v = (*h)[i].as_numbers();
      if (v.size() != 3) (*h)[i].fail("expected [amplitude, center, exponent]");
      f.kinks.push_back({v[0], v[1], v[2]});
    }
  }
  node.finish();
  return f;
}

ScalePtr parse_scale(const Node& node) {
  ScalePtr out;
  if (node.has("flat")) {
    const auto size = node.integer("flat");
    if (size < 1) node.at("flat").fail("flat scale needs a positive size");
    out = SpectralScale::flat(static_cast<std::size_t>(size));
  } else {
    const auto n = node.integer("n", 1);
    const auto k = node.integer("K");
    if (n != 1 && n != 2) node.at("n").fail("torus dimension must be 1 or 2");
    if (k < 0) node.at("K").fail("radius must be nonnegative");
    out = SpectralScale::torus(static_cast<int>(n), static_cast<int>(k), node.number("k0", 0.0));
  }
  node.finish();
  return out;
}

Partition parse_grid(const Node& node) {
  const double start = node.number("start", 0.0), end = node.number("end", 1.0);
  if (!(end > start)) node.fail("grid needs end > start");
  std::optional<Partition> out;
  if (node.has("level")) {
    const auto level = node.integer("level");
    if (level < 0 || level > 24) node.at("level").fail("level must lie in [0, 24]");
    out = Partition::dyadic(start, end, static_cast<int>(level));
  } else {
    const auto cells = node.integer("cells");
    if (cells < 1) node.at("cells").fail("need at least one cell");
    out = Partition::uniform(start, end, static_cast<std::size_t>(cells));
  }
  node.finish();
  return *out;
}

std::function<GalerkinVector(double)> parse_field(const Node& node, const ScalePtr& scale) {
  if (node.has("file")) {
    std::ifstream in(node.string("file"));
    if (!in) node.at("file").fail("cannot open field file");
    GalerkinVector v = read_galerkin_csv(in);
    if (!v.scale()->same_as(*scale)) node.at("file").fail("field file lives on another scale");
    v = GalerkinVector(scale, v.coefficients());
    node.finish();
    return [v](double) { return v; };
  }
  struct Term {
    Mode k;
    TimeFunction re, im;
  };
  std::vector<Term> terms;
  if (auto c = node.get("constant")) {
    if (scale->is_flat()) {
      const TimeFunction f = parse_function(*c);
      for (std::size_t i = 0; i < scale->size(); ++i) terms.push_back({scale->mode(i), f, TimeFunction::constant(0.0)});
    } else {
      terms.push_back({Mode{0, 0}, parse_function(*c), TimeFunction::constant(0.0)});
    }
  }
  if (auto modes = node.get("modes")) {
    for (std::size_t i = 0; i < modes->size(); ++i) {
      const Node m = (*modes)[i];
      const Mode k = parse_mode(m.at("k"), *scale);
      terms.push_back({k, m.has("re") ? parse_function(m.at("re")) : TimeFunction::constant(0.0),
                       m.has("im") ? parse_function(m.at("im")) : TimeFunction::constant(0.0)});
      m.finish();
    }
  }
  // a cos(k.x) = a/2 (e_k + e_-k), a sin(k.x) = -i a/2 e_k + i a/2 e_-k.
  for (const char* key : {"cos", "sin"}) {
    auto list = node.get(key);
    if (!list) continue;
    if (scale->is_flat()) list->fail("trigonometric fields need a torus scale");
    const bool is_cos = std::string(key) == "cos";
    for (std::size_t i = 0; i < list->size(); ++i) {
      const Node m = (*list)[i];
      const Mode k = parse_mode(m.at("k"), *scale);
      TimeFunction half = parse_function(m.at("amplitude"));
      TimeFunction neg = half;
      for (auto* f : {&half, &neg}) {
        const double sign = f == &half ? 0.5 : -0.5;
        for (auto& c : f->poly) c *= sign;
        for (auto& w : f->sines) w.amplitude *= sign;
        for (auto& w : f->cosines) w.amplitude *= sign;
        for (auto& h : f->kinks) h.amplitude *= sign;
      }
      const TimeFunction zero = TimeFunction::constant(0.0);
      if (is_cos) {
        terms.push_back({k, half, zero});
        terms.push_back({negate(k, *scale), half, zero});
      } else {
        terms.push_back({k, zero, neg});
        terms.push_back({negate(k, *scale), zero, half});
      }
      m.finish();
    }
  }
  node.finish();
  return [scale, terms](double t) {
    GalerkinVector v(scale);
    for (const auto& term : terms) v[scale->index_of(term.k)] += Complex(term.re(t), term.im(t));
    return v;
  };
}

GalerkinVector parse_vector(const Node& node, const ScalePtr& scale) { return parse_field(node, scale)(0.0); }

std::vector<TimeFunction> parse_components(const Node& node) {
  std::vector<TimeFunction> out;
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(parse_function(node[i]));
  return out;
}

RoughPath parse_driver(const Node& node, const Partition& grid, std::optional<std::uint64_t> seed,
                       std::optional<int> refine_override) {
  const std::string kind = node.string("kind");
  const int refine = refine_override ? *refine_override : static_cast<int>(node.integer("refine", 1));
  node.touch("refine");
  if (refine < 1) node.fail("refine must be positive");
  const auto need_seed = [&]() -> std::uint64_t {
    if (!seed) node.fail("stochastic driver '" + kind + "' needs a seed");
    return *seed;
  };
  std::optional<RoughPath> out;
  if (kind == "smooth") {
    const auto comps = parse_components(node.at("components"));
    if (comps.empty()) node.at("components").fail("need at least one component");
    const auto path = [comps](double t) {
      Eigen::VectorXd v(static_cast<Eigen::Index>(comps.size()));
      for (std::size_t c = 0; c < comps.size(); ++c) v[static_cast<Eigen::Index>(c)] = comps[c](t);
      return v;
    };
    out = lift_smooth(path, grid, refine, node.number("gamma", 0.5));
  } else if (kind == "piecewise_linear") {
    const auto d = node.integer("dimension", 1);
    std::mt19937_64 rng(need_seed());
    std::normal_distribution<double> normal;
    std::vector<Eigen::VectorXd> samples{Eigen::VectorXd::Zero(d)};
    for (std::size_t i = 1; i < grid.size(); ++i) {
      Eigen::VectorXd next = samples.back();
      for (Eigen::Index c = 0; c < d; ++c) next[c] += std::sqrt(grid[i] - grid[i - 1]) * normal(rng);
      samples.push_back(std::move(next));
    }
    out = lift_piecewise_linear(grid, samples, node.number("gamma", 0.45));
  } else if (kind == "brownian") {
    const std::string conv = node.string("convention", "ito");
    if (conv != "ito" && conv != "stratonovich") node.at("convention").fail("expected 'ito' or 'stratonovich'");
    out = sample_bm_lift(static_cast<int>(node.integer("dimension", 1)), grid, need_seed(),
                         conv == "ito" ? Convention::Ito : Convention::Stratonovich, refine,
                         node.number("gamma", 0.45));
  } else if (kind == "fbm") {
    out = sample_fbm_lift(node.number("hurst"), grid, need_seed(), refine,
                          static_cast<int>(node.integer("dimension", 1)), node.number("gamma", 0.0));
  } else {
    node.at("kind").fail("unknown driver kind '" + kind + "'");
  }
  node.finish();
  return *out;
}

OperatorFamily parse_family(const Node& node, const ScalePtr& scale) {
  const std::string kind = node.string("kind");
  std::optional<OperatorFamily> out;
  if (kind == "heat") {
    out = heat_family(scale, parse_function(node.at("nu")));
  } else if (kind == "divergence") {
    if (scale->is_flat()) node.fail("divergence family needs a torus scale");
    out = divergence_family(scale, parse_field(node.at("coefficient"), scale));
  } else if (kind == "diagonal") {
    const Node list = node.at("symbols");
    if (list.size() != scale->size()) list.fail("need one symbol per mode");
    std::vector<TimeFunction> symbols;
    for (std::size_t i = 0; i < list.size(); ++i) symbols.push_back(parse_function(list[i]));
    out = OperatorFamily::diagonal(scale, [symbols](double t) {
      Eigen::VectorXd v(static_cast<Eigen::Index>(symbols.size()));
      for (std::size_t i = 0; i < symbols.size(); ++i) v[static_cast<Eigen::Index>(i)] = symbols[i](t);
      return v;
    });
  } else if (kind == "dense") {
    const Node rows = node.at("matrix");
    const std::size_t n = scale->size();
    if (rows.size() != n) rows.fail("matrix needs one row per mode");
    std::vector<TimeFunction> entries;
    for (std::size_t i = 0; i < n; ++i) {
      if (rows[i].size() != n) rows[i].fail("matrix row has the wrong length");
      for (std::size_t j = 0; j < n; ++j) entries.push_back(parse_function(rows[i][j]));
    }
    out = OperatorFamily::dense(scale, [entries, n](double t) {
      CMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = entries[i * n + j](t);
      return m;
    });
  } else if (kind == "sum") {
    const Node terms = node.at("terms");
    if (terms.size() == 0) terms.fail("need at least one term");
    out = parse_family(terms[0], scale);
    for (std::size_t i = 1; i < terms.size(); ++i) out = *out + parse_family(terms[i], scale);
  } else {
    node.at("kind").fail("unknown family kind '" + kind + "'");
  }
  if (auto h = node.get("holder")) {
    out->metadata().rho = h->number("rho");
    out->metadata().omega = control_linear(h->number("constant", 1.0));
    h->finish();
  }
  node.finish();
  return *out;
}

NonlinearityPtr parse_nonlinearity(const Node& node, const ScalePtr& scale) {
  const std::string kind = node.string("kind");
  NonlinearityPtr out;
  if (kind == "zero") {
    out = std::make_shared<ZeroNonlinearity>(scale);
  } else if (kind == "multiplier") {
    CVector m(static_cast<Eigen::Index>(scale->size()));
    if (node.has("values")) {
      const auto v = node.numbers("values");
      if (v.size() != scale->size()) node.at("values").fail("need one value per mode");
      for (std::size_t i = 0; i < v.size(); ++i) m[static_cast<Eigen::Index>(i)] = v[i];
    } else {
      m.setConstant(node.number("constant"));
    }
    out = std::make_shared<MultiplierNonlinearity>(scale, m, node.number("shift", 0.0), "multiplier");
  } else if (kind == "fractional") {
    out = MultiplierNonlinearity::fractional(scale, node.number("coefficient", 1.0), node.number("sigma"));
  } else if (kind == "polynomial") {
    out = PolynomialNonlinearity::constant(scale, node.numbers("coefficients"), node.number("shift", 0.0));
  } else {
    node.at("kind").fail("unknown nonlinearity kind '" + kind + "'");
  }
  node.finish();
  return out;
}

CMatrix parse_matrix(const Node& node) {
  const std::size_t rows = node.size();
  if (rows == 0) node.fail("empty matrix");
  const std::size_t cols = node[0].size();
  CMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const auto r = node[i].as_numbers();
    if (r.size() != cols) node[i].fail("ragged matrix");
    for (std::size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[j];
  }
  return m;
}

}  // namespace roughevo::cli
