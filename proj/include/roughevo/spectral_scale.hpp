#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "roughevo/timebase.hpp"

namespace roughevo {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using Mode = std::array<int, 2>;

/// Finite Fourier realization of the Bessel scale B_beta = H^{k0 + 2 beta, 2} on the torus
/// (period 2 pi, so -Laplace has symbol |k|^2). A "flat" scale has all symbols zero and
/// realizes the constant family B_beta = C^size used for finite-dimensional problems.
class SpectralScale {
public:
  static std::shared_ptr<const SpectralScale> torus(int dimension, int radius, double base_exponent = 0.0);
  static std::shared_ptr<const SpectralScale> flat(std::size_t size);

  std::size_t size() const { return modes_.size(); }
  int dimension() const { return dimension_; }
  int radius() const { return radius_; }
  double base_exponent() const { return base_exponent_; }
  bool is_flat() const { return dimension_ == 0; }

  const Mode& mode(std::size_t i) const { return modes_[i]; }
  /// |k|^2 for mode i.
  double symbol(std::size_t i) const { return symbols_[i]; }
  /// w_beta(k) = (1 + |k|^2)^{k0/2 + beta}.
  double weight(std::size_t i, double beta) const;
  Eigen::VectorXd weights(double beta) const;

  /// Index of mode k, or npos when k lies outside the truncation.
  std::size_t index_of(const Mode& k) const;

  bool same_as(const SpectralScale& other) const {
    return dimension_ == other.dimension_ && radius_ == other.radius_ && modes_.size() == other.modes_.size() &&
           base_exponent_ == other.base_exponent_;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
  SpectralScale() = default;
  int dimension_ = 0;
  int radius_ = 0;
  double base_exponent_ = 0.0;
  std::vector<Mode> modes_;
  std::vector<double> symbols_;
};

using ScalePtr = std::shared_ptr<const SpectralScale>;

/// Coefficient table c_k, |k|_inf <= K, of a field u(x) = sum_k c_k e^{i k.x}.
class GalerkinVector {
public:
  GalerkinVector() = default;
  explicit GalerkinVector(ScalePtr scale);
  GalerkinVector(ScalePtr scale, CVector coefficients);

  static GalerkinVector mode(ScalePtr scale, const Mode& k, Complex value = 1.0);

  const ScalePtr& scale() const { return scale_; }
  const CVector& coefficients() const { return coeffs_; }
  CVector& coefficients() { return coeffs_; }
  std::size_t size() const { return static_cast<std::size_t>(coeffs_.size()); }

  Complex operator[](std::size_t i) const { return coeffs_[static_cast<Eigen::Index>(i)]; }
  Complex& operator[](std::size_t i) { return coeffs_[static_cast<Eigen::Index>(i)]; }
  Complex at(const Mode& k) const;

  GalerkinVector& operator+=(const GalerkinVector& other);
  GalerkinVector& operator-=(const GalerkinVector& other);
  GalerkinVector& operator*=(Complex factor);

  friend GalerkinVector operator+(GalerkinVector a, const GalerkinVector& b) { return a += b; }
  friend GalerkinVector operator-(GalerkinVector a, const GalerkinVector& b) { return a -= b; }
  friend GalerkinVector operator*(Complex f, GalerkinVector a) { return a *= f; }
  friend GalerkinVector operator*(GalerkinVector a, Complex f) { return a *= f; }

private:
  ScalePtr scale_;
  CVector coeffs_;
};

/// Weighted Parseval norm (sum_k w_beta(k)^2 |c_k|^2)^{1/2} of a raw coefficient vector.
double weighted_norm(const SpectralScale& scale, const CVector& coeffs, double beta);
double norm_beta(const GalerkinVector& v, double beta);

/// |v|_b^{g-a} - |v|_a^{g-b} |v|_g^{b-a}; nonpositive in this Hilbert realization.
double interpolation_check(const GalerkinVector& v, double alpha, double beta, double gamma);

/// (-Laplace)^sigma: multiplier |k|^{2 sigma}, with mode 0 mapped to 0 for sigma > 0.
GalerkinVector fractional_laplacian(const GalerkinVector& v, double sigma);
Eigen::VectorXd fractional_laplacian_symbol(const SpectralScale& scale, double sigma);

/// max_k |c_{-k} - conj(c_k)|; zero for coefficient tables of real fields.
double conjugate_symmetry_defect(const GalerkinVector& v);

/// L^2 pairing (2 pi)^{-n} int u conj(phi) dx = sum_k u_k conj(phi_k).
Complex pairing(const GalerkinVector& u, const GalerkinVector& phi);

/// Values of the field on the uniform grid with `points` nodes per axis (row-major for n = 2).
CVector to_physical(const GalerkinVector& v, std::size_t points);
/// Inverse of to_physical followed by truncation to the scale's modes.
GalerkinVector from_physical(const ScalePtr& scale, const CVector& values, std::size_t points);

/// Field-valued map F: B_theta -> B_{theta - shift} with directional derivative.
class Nonlinearity {
public:
  virtual ~Nonlinearity() = default;
  virtual GalerkinVector apply(const GalerkinVector& v) const = 0;
  /// DF(v) h.
  virtual GalerkinVector derivative(const GalerkinVector& v, const GalerkinVector& h) const = 0;
  /// DF(v) applied to several directions.
  virtual std::vector<GalerkinVector> derivatives(const GalerkinVector& v, const std::vector<GalerkinVector>& hs) const;
  /// Regularity loss (sigma for the diffusion coefficient, delta for the drift).
  virtual double shift() const = 0;
  virtual bool is_zero() const { return false; }
  virtual std::string describe() const = 0;
};

using NonlinearityPtr = std::shared_ptr<const Nonlinearity>;

class ZeroNonlinearity final : public Nonlinearity {
public:
  explicit ZeroNonlinearity(ScalePtr scale) : scale_(std::move(scale)) {}
  GalerkinVector apply(const GalerkinVector&) const override { return GalerkinVector(scale_); }
  GalerkinVector derivative(const GalerkinVector&, const GalerkinVector&) const override {
    return GalerkinVector(scale_);
  }
  double shift() const override { return 0.0; }
  bool is_zero() const override { return true; }
  std::string describe() const override { return "zero"; }

private:
  ScalePtr scale_;
};

/// Diagonal linear map u -> m .* u, e.g. c (-Laplace)^sigma.
class MultiplierNonlinearity final : public Nonlinearity {
public:
  MultiplierNonlinearity(ScalePtr scale, CVector multiplier, double shift, std::string name);
  static std::shared_ptr<MultiplierNonlinearity> fractional(ScalePtr scale, double coefficient, double sigma);

  GalerkinVector apply(const GalerkinVector& v) const override;
  GalerkinVector derivative(const GalerkinVector& v, const GalerkinVector& h) const override;
  double shift() const override { return shift_; }
  std::string describe() const override { return name_; }
  const CVector& multiplier() const { return multiplier_; }

private:
  ScalePtr scale_;
  CVector multiplier_;
  double shift_;
  std::string name_;
};

/// P(u)(x) = sum_j h_j(x) u(x)^j with coefficient fields h_j, evaluated by alias-free
/// pseudo-spectral products on a zero-padded grid.
class PolynomialNonlinearity final : public Nonlinearity {
public:
  PolynomialNonlinearity(ScalePtr scale, std::vector<GalerkinVector> coefficients, double shift = 0.0);
  /// Constant real coefficients: h_j = c_j * (mode 0).
  static std::shared_ptr<PolynomialNonlinearity> constant(ScalePtr scale, const std::vector<double>& coefficients,
                                                          double shift = 0.0);

  GalerkinVector apply(const GalerkinVector& v) const override;
  GalerkinVector derivative(const GalerkinVector& v, const GalerkinVector& h) const override;
  std::vector<GalerkinVector> derivatives(const GalerkinVector& v,
                                          const std::vector<GalerkinVector>& hs) const override;
  double shift() const override { return shift_; }
  std::string describe() const override;

  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  const std::vector<GalerkinVector>& coefficients() const { return coeffs_; }
  /// Grid points per axis used for the padded products.
  std::size_t padded_points() const { return padded_; }

private:
  ScalePtr scale_;
  std::vector<GalerkinVector> coeffs_;
  std::vector<CVector> coeff_values_;  // h_j on the padded grid
  double shift_;
  std::size_t padded_;
};

GalerkinVector apply_polynomial(const PolynomialNonlinearity& p, const GalerkinVector& v);

/// h -> P'(v) h with P'(v) tabulated once on the padded grid.
class PolynomialJacobian {
public:
  PolynomialJacobian(const PolynomialNonlinearity& p, const GalerkinVector& v);
  GalerkinVector operator()(const GalerkinVector& h) const;

private:
  ScalePtr scale_;
  std::size_t padded_;
  CVector derivative_values_;
};

PolynomialJacobian jacobian_polynomial(const PolynomialNonlinearity& p, const GalerkinVector& v);

/// CSV with a JSON metadata line {"n", "K", "k0"} followed by rows k..., re, im.
void write_galerkin_csv(std::ostream& os, const GalerkinVector& v);
GalerkinVector read_galerkin_csv(std::istream& is);

}  // namespace roughevo
