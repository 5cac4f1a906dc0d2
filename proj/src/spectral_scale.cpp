#include "roughevo/spectral_scale.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <tuple>

#include <fftw3.h>
#include <iomanip>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace roughevo {

namespace {

constexpr std::size_t kMaxPaddedPoints = std::size_t{1} << 22;

// FFTW planning is not thread-safe; plans are cached and executed through the new-array interface.
class PlanCache {
public:
  fftw_plan get(int dimension, std::size_t points, int direction) {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto key = std::make_tuple(dimension, points, direction);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    const std::size_t total = dimension == 1 ? points : points * points;
    auto* buf = fftw_alloc_complex(total);
    fftw_plan plan = dimension == 1
                         ? fftw_plan_dft_1d(static_cast<int>(points), buf, buf, direction,
                                            FFTW_ESTIMATE | FFTW_UNALIGNED)
                         : fftw_plan_dft_2d(static_cast<int>(points), static_cast<int>(points), buf, buf,
                                            direction, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

private:
  std::mutex mutex_;
  std::map<std::tuple<int, std::size_t, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

void execute(int dimension, std::size_t points, int direction, CVector& data) {
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan_cache().get(dimension, points, direction), ptr, ptr);
}

std::size_t wrap(int k, std::size_t points) {
  const auto m = static_cast<long>(points);
  return static_cast<std::size_t>(((k % m) + m) % m);
}

void require_same_scale(const GalerkinVector& a, const GalerkinVector& b) {
  if (!a.scale() || !b.scale() || !a.scale()->same_as(*b.scale()))
    throw InvalidArgument("Galerkin vectors live on different scales");
}

std::size_t padded_size(int radius, int degree) {
  // Products of degree m+1 reach modes (m+1)K; aliases stay outside [-K, K] when M > (m+2)K.
  std::size_t m = static_cast<std::size_t>(std::max(degree, 1) + 2) * static_cast<std::size_t>(radius) + 1;
  std::size_t p = 1;
  while (p < m) p <<= 1;
  return p;
}

}  // namespace

std::shared_ptr<const SpectralScale> SpectralScale::torus(int dimension, int radius, double base_exponent) {
  if (dimension != 1 && dimension != 2) throw InvalidArgument("spatial dimension must be 1 or 2");
  if (radius < 0) throw InvalidArgument("truncation radius must be nonnegative");
  auto s = std::shared_ptr<SpectralScale>(new SpectralScale());
  s->dimension_ = dimension;
  s->radius_ = radius;
  s->base_exponent_ = base_exponent;
  if (dimension == 1) {
    for (int k = -radius; k <= radius; ++k) s->modes_.push_back({k, 0});
  } else {
    for (int k1 = -radius; k1 <= radius; ++k1)
      for (int k2 = -radius; k2 <= radius; ++k2) s->modes_.push_back({k1, k2});
  }
  for (const auto& k : s->modes_) s->symbols_.push_back(double(k[0]) * k[0] + double(k[1]) * k[1]);
  return s;
}

std::shared_ptr<const SpectralScale> SpectralScale::flat(std::size_t size) {
  if (size == 0) throw InvalidArgument("flat scale needs positive size");
  auto s = std::shared_ptr<SpectralScale>(new SpectralScale());
  s->dimension_ = 0;
  s->radius_ = 0;
  for (std::size_t i = 0; i < size; ++i) s->modes_.push_back({static_cast<int>(i), 0});
  s->symbols_.assign(size, 0.0);
  return s;
}

double SpectralScale::weight(std::size_t i, double beta) const {
  return std::pow(1.0 + symbols_[i], 0.5 * base_exponent_ + beta);
}

Eigen::VectorXd SpectralScale::weights(double beta) const {
  Eigen::VectorXd w(static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i) w[static_cast<Eigen::Index>(i)] = weight(i, beta);
  return w;
}

std::size_t SpectralScale::index_of(const Mode& k) const {
  if (is_flat()) {
    return (k[1] == 0 && k[0] >= 0 && static_cast<std::size_t>(k[0]) < size()) ? static_cast<std::size_t>(k[0])
                                                                               : npos;
  }
  if (std::abs(k[0]) > radius_ || std::abs(k[1]) > radius_) return npos;
  if (dimension_ == 1) return k[1] == 0 ? static_cast<std::size_t>(k[0] + radius_) : npos;
  const auto side = static_cast<std::size_t>(2 * radius_ + 1);
  return static_cast<std::size_t>(k[0] + radius_) * side + static_cast<std::size_t>(k[1] + radius_);
}

GalerkinVector::GalerkinVector(ScalePtr scale)
    : scale_(std::move(scale)), coeffs_(CVector::Zero(static_cast<Eigen::Index>(scale_->size()))) {}

GalerkinVector::GalerkinVector(ScalePtr scale, CVector coefficients)
    : scale_(std::move(scale)), coeffs_(std::move(coefficients)) {
  if (static_cast<std::size_t>(coeffs_.size()) != scale_->size())
    throw InvalidArgument("coefficient table does not match the scale");
}

GalerkinVector GalerkinVector::mode(ScalePtr scale, const Mode& k, Complex value) {
  GalerkinVector v(scale);
  const auto idx = scale->index_of(k);
  if (idx == SpectralScale::npos) throw InvalidArgument("mode outside truncation");
  v[idx] = value;
  return v;
}

Complex GalerkinVector::at(const Mode& k) const {
  const auto idx = scale_->index_of(k);
  return idx == SpectralScale::npos ? Complex{0.0, 0.0} : (*this)[idx];
}

GalerkinVector& GalerkinVector::operator+=(const GalerkinVector& other) {
  require_same_scale(*this, other);
  coeffs_ += other.coeffs_;
  return *this;
}

GalerkinVector& GalerkinVector::operator-=(const GalerkinVector& other) {
  require_same_scale(*this, other);
  coeffs_ -= other.coeffs_;
  return *this;
}

GalerkinVector& GalerkinVector::operator*=(Complex factor) {
  coeffs_ *= factor;
  return *this;
}

double weighted_norm(const SpectralScale& scale, const CVector& coeffs, double beta) {
  double acc = 0.0;
  for (std::size_t i = 0; i < scale.size(); ++i) {
    const double w = scale.weight(i, beta);
    acc += w * w * std::norm(coeffs[static_cast<Eigen::Index>(i)]);
  }
  return std::sqrt(acc);
}

double norm_beta(const GalerkinVector& v, double beta) { return weighted_norm(*v.scale(), v.coefficients(), beta); }

double interpolation_check(const GalerkinVector& v, double alpha, double beta, double gamma) {
  if (!(alpha <= beta && beta <= gamma)) throw InvalidArgument("interpolation levels must satisfy a <= b <= g");
  const double na = norm_beta(v, alpha), nb = norm_beta(v, beta), ng = norm_beta(v, gamma);
  return std::pow(nb, gamma - alpha) - std::pow(na, gamma - beta) * std::pow(ng, beta - alpha);
}

Eigen::VectorXd fractional_laplacian_symbol(const SpectralScale& scale, double sigma) {
  Eigen::VectorXd m(static_cast<Eigen::Index>(scale.size()));
  for (std::size_t i = 0; i < scale.size(); ++i) {
    const double ksq = scale.symbol(i);
    m[static_cast<Eigen::Index>(i)] = sigma == 0.0 ? 1.0 : (ksq == 0.0 ? 0.0 : std::pow(ksq, sigma));
  }
  return m;
}

GalerkinVector fractional_laplacian(const GalerkinVector& v, double sigma) {
  const Eigen::VectorXd m = fractional_laplacian_symbol(*v.scale(), sigma);
  return GalerkinVector(v.scale(), (v.coefficients().array() * m.array().cast<Complex>()).matrix());
}

double conjugate_symmetry_defect(const GalerkinVector& v) {
  const auto& sc = *v.scale();
  if (sc.is_flat()) return (v.coefficients().imag()).cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (std::size_t i = 0; i < sc.size(); ++i) {
    const Mode& k = sc.mode(i);
    const auto j = sc.index_of({-k[0], -k[1]});
    worst = std::max(worst, std::abs(v[j] - std::conj(v[i])));
  }
  return worst;
}

Complex pairing(const GalerkinVector& u, const GalerkinVector& phi) {
  require_same_scale(u, phi);
  return phi.coefficients().dot(u.coefficients());  // Eigen's dot conjugates the first argument
}

CVector to_physical(const GalerkinVector& v, std::size_t points) {
  const auto& sc = *v.scale();
  if (sc.is_flat()) throw InvalidArgument("flat scales have no physical grid");
  const int n = sc.dimension();
  const std::size_t total = n == 1 ? points : points * points;
  CVector data = CVector::Zero(static_cast<Eigen::Index>(total));
  for (std::size_t i = 0; i < sc.size(); ++i) {
    const Mode& k = sc.mode(i);
    const std::size_t idx = n == 1 ? wrap(k[0], points) : wrap(k[0], points) * points + wrap(k[1], points);
    data[static_cast<Eigen::Index>(idx)] += v[i];
  }
  execute(n, points, FFTW_BACKWARD, data);
  return data;
}

GalerkinVector from_physical(const ScalePtr& scale, const CVector& values, std::size_t points) {
  const int n = scale->dimension();
  CVector data = values;
  execute(n, points, FFTW_FORWARD, data);
  const double norm = n == 1 ? double(points) : double(points) * double(points);
  GalerkinVector out(scale);
  for (std::size_t i = 0; i < scale->size(); ++i) {
    const Mode& k = scale->mode(i);
    const std::size_t idx = n == 1 ? wrap(k[0], points) : wrap(k[0], points) * points + wrap(k[1], points);
    out[i] = data[static_cast<Eigen::Index>(idx)] / norm;
  }
  return out;
}

MultiplierNonlinearity::MultiplierNonlinearity(ScalePtr scale, CVector multiplier, double shift, std::string name)
    : scale_(std::move(scale)), multiplier_(std::move(multiplier)), shift_(shift), name_(std::move(name)) {
  if (static_cast<std::size_t>(multiplier_.size()) != scale_->size())
    throw InvalidArgument("multiplier does not match the scale");
}

std::shared_ptr<MultiplierNonlinearity> MultiplierNonlinearity::fractional(ScalePtr scale, double coefficient,
                                                                           double sigma) {
  CVector m = (coefficient * fractional_laplacian_symbol(*scale, sigma)).cast<Complex>();
  std::ostringstream name;
  name << coefficient << "*(-Laplace)^" << sigma;
  return std::make_shared<MultiplierNonlinearity>(std::move(scale), std::move(m), sigma, name.str());
}

GalerkinVector MultiplierNonlinearity::apply(const GalerkinVector& v) const {
  return GalerkinVector(scale_, (v.coefficients().array() * multiplier_.array()).matrix());
}

GalerkinVector MultiplierNonlinearity::derivative(const GalerkinVector&, const GalerkinVector& h) const {
  return apply(h);
}

PolynomialNonlinearity::PolynomialNonlinearity(ScalePtr scale, std::vector<GalerkinVector> coefficients, double shift)
    : scale_(std::move(scale)), coeffs_(std::move(coefficients)), shift_(shift) {
  if (scale_->is_flat()) throw InvalidArgument("polynomial nonlinearities need a torus scale");
  if (coeffs_.empty()) coeffs_.emplace_back(scale_);
  for (const auto& h : coeffs_)
    if (!h.scale()->same_as(*scale_)) throw InvalidArgument("coefficient field on a different scale");
  padded_ = padded_size(scale_->radius(), degree());
  const std::size_t total = scale_->dimension() == 1 ? padded_ : padded_ * padded_;
  if (padded_ > kMaxPaddedPoints || total > kMaxPaddedPoints)
    throw InvalidArgument("padded grid for polynomial evaluation is too large");
  for (const auto& h : coeffs_) coeff_values_.push_back(to_physical(h, padded_));
}

std::shared_ptr<PolynomialNonlinearity> PolynomialNonlinearity::constant(ScalePtr scale,
                                                                         const std::vector<double>& coefficients,
                                                                         double shift) {
  std::vector<GalerkinVector> h;
  for (double c : coefficients) h.push_back(GalerkinVector::mode(scale, {0, 0}, c));
  return std::make_shared<PolynomialNonlinearity>(std::move(scale), std::move(h), shift);
}

GalerkinVector PolynomialNonlinearity::apply(const GalerkinVector& v) const {
  if (!v.scale()->same_as(*scale_)) throw InvalidArgument("argument on a different scale");
  const CVector u = to_physical(v, padded_);
  // Horner in physical space.
  CVector acc = coeff_values_.back();
  for (int j = degree() - 1; j >= 0; --j)
    acc = (acc.array() * u.array() + coeff_values_[static_cast<std::size_t>(j)].array()).matrix();
  return from_physical(scale_, acc, padded_);
}

GalerkinVector PolynomialNonlinearity::derivative(const GalerkinVector& v, const GalerkinVector& h) const {
  return PolynomialJacobian(*this, v)(h);
}

std::vector<GalerkinVector> PolynomialNonlinearity::derivatives(const GalerkinVector& v,
                                                                const std::vector<GalerkinVector>& hs) const {
  const PolynomialJacobian jac(*this, v);
  std::vector<GalerkinVector> out;
  out.reserve(hs.size());
  for (const auto& h : hs) out.push_back(jac(h));
  return out;
}

std::string PolynomialNonlinearity::describe() const {
  std::ostringstream os;
  os << "polynomial(degree=" << degree() << ", shift=" << shift_ << ")";
  return os.str();
}

std::vector<GalerkinVector> Nonlinearity::derivatives(const GalerkinVector& v,
                                                      const std::vector<GalerkinVector>& hs) const {
  std::vector<GalerkinVector> out;
  out.reserve(hs.size());
  for (const auto& h : hs) out.push_back(derivative(v, h));
  return out;
}

GalerkinVector apply_polynomial(const PolynomialNonlinearity& p, const GalerkinVector& v) { return p.apply(v); }

PolynomialJacobian::PolynomialJacobian(const PolynomialNonlinearity& p, const GalerkinVector& v)
    : scale_(v.scale()), padded_(p.padded_points()) {
  const CVector u = to_physical(v, padded_);
  const auto& h = p.coefficients();
  const int m = p.degree();
  derivative_values_ = CVector::Zero(u.size());
  if (m >= 1) {
    // P'(u) = sum_j j h_j u^{j-1}, Horner again.
    std::vector<CVector> hv;
    for (const auto& c : h) hv.push_back(to_physical(c, padded_));
    CVector acc = double(m) * hv[static_cast<std::size_t>(m)];
    for (int j = m - 1; j >= 1; --j)
      acc = (acc.array() * u.array() + double(j) * hv[static_cast<std::size_t>(j)].array()).matrix();
    derivative_values_ = acc;
  }
}

GalerkinVector PolynomialJacobian::operator()(const GalerkinVector& h) const {
  const CVector hv = to_physical(h, padded_);
  return from_physical(scale_, (derivative_values_.array() * hv.array()).matrix(), padded_);
}

PolynomialJacobian jacobian_polynomial(const PolynomialNonlinearity& p, const GalerkinVector& v) {
  return PolynomialJacobian(p, v);
}

}  // namespace roughevo

namespace roughevo {

void write_galerkin_csv(std::ostream& os, const GalerkinVector& v) {
  const auto& scale = *v.scale();
  nlohmann::json meta = {{"n", scale.dimension()}, {"K", scale.radius()}, {"k0", scale.base_exponent()}};
  if (scale.is_flat()) meta["size"] = scale.size();
  os << "# " << meta.dump() << "\n" << std::setprecision(17);
  os << (scale.dimension() == 2 ? "k1,k2,re,im\n" : "k1,re,im\n");
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Mode& k = scale.mode(i);
    os << k[0] << ",";
    if (scale.dimension() == 2) os << k[1] << ",";
    os << v[i].real() << "," << v[i].imag() << "\n";
  }
}

GalerkinVector read_galerkin_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) throw InvalidArgument("missing Galerkin metadata line");
  const auto meta = nlohmann::json::parse(line.substr(2));
  const int n = meta.at("n").get<int>();
  ScalePtr scale = n == 0 ? SpectralScale::flat(meta.at("size").get<std::size_t>())
                          : SpectralScale::torus(n, meta.at("K").get<int>(), meta.at("k0").get<double>());
  std::getline(is, line);
  GalerkinVector v(scale);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
    const std::size_t expect = n == 2 ? 4 : 3;
    if (cells.size() != expect) throw InvalidArgument("malformed Galerkin row");
    const Mode k{static_cast<int>(cells[0]), n == 2 ? static_cast<int>(cells[1]) : 0};
    const std::size_t idx = n == 0 ? static_cast<std::size_t>(cells[0]) : scale->index_of(k);
    if (idx == SpectralScale::npos || idx >= v.size()) throw InvalidArgument("Galerkin row outside the truncation");
    v[idx] = Complex(cells[expect - 2], cells[expect - 1]);
  }
  return v;
}

}  // namespace roughevo
