#pragma once

#include <variant>

#include "roughevo/spectral_scale.hpp"

namespace roughevo {

/// Linear operator on a Galerkin truncation, kept diagonal when possible.
class LinearOp {
public:
  LinearOp() = default;
  static LinearOp identity(std::size_t size);
  static LinearOp zero(std::size_t size);
  static LinearOp diagonal(CVector entries);
  static LinearOp dense(CMatrix matrix);

  bool is_diagonal() const { return std::holds_alternative<CVector>(rep_); }
  std::size_t size() const;

  const CVector& diagonal_entries() const { return std::get<CVector>(rep_); }
  const CMatrix& matrix() const { return std::get<CMatrix>(rep_); }
  CMatrix to_dense() const;

  CVector apply(const CVector& x) const;
  GalerkinVector apply(const GalerkinVector& x) const;

  LinearOp operator*(const LinearOp& rhs) const;
  LinearOp operator+(const LinearOp& rhs) const;
  LinearOp operator-(const LinearOp& rhs) const;
  LinearOp scaled(Complex factor) const;

private:
  explicit LinearOp(CVector d) : rep_(std::move(d)) {}
  explicit LinearOp(CMatrix m) : rep_(std::move(m)) {}
  std::variant<CVector, CMatrix> rep_;
};

/// ||A||_{L(B_from, B_to)} = largest singular value of W_to A W_from^{-1}.
double operator_norm(const LinearOp& op, const SpectralScale& scale, double from_beta, double to_beta);
double operator_norm(const LinearOp& op, const SpectralScale& scale, double beta);
double max_entry(const LinearOp& op);

/// Matrix exponential by scaling and squaring with the [13/13] Pade approximant.
CMatrix expm(const CMatrix& a);
/// Entrywise for diagonal operators, Pade scaling and squaring otherwise.
LinearOp expm(const LinearOp& a);

/// Largest real part of the spectrum.
double spectral_abscissa(const LinearOp& a);

}  // namespace roughevo
