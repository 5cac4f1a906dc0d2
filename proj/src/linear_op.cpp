#include "roughevo/linear_op.hpp"

#include <vector>

#include <algorithm>
#include <cmath>

namespace roughevo {

LinearOp LinearOp::identity(std::size_t size) {
  return LinearOp(CVector(CVector::Ones(static_cast<Eigen::Index>(size))));
}

LinearOp LinearOp::zero(std::size_t size) {
  return LinearOp(CVector(CVector::Zero(static_cast<Eigen::Index>(size))));
}

LinearOp LinearOp::diagonal(CVector entries) { return LinearOp(std::move(entries)); }

LinearOp LinearOp::dense(CMatrix matrix) {
  if (matrix.rows() != matrix.cols()) throw InvalidArgument("operator matrix must be square");
  return LinearOp(std::move(matrix));
}

std::size_t LinearOp::size() const {
  return is_diagonal() ? static_cast<std::size_t>(diagonal_entries().size())
                       : static_cast<std::size_t>(matrix().rows());
}

CMatrix LinearOp::to_dense() const {
  if (is_diagonal()) return diagonal_entries().asDiagonal();
  return matrix();
}

CVector LinearOp::apply(const CVector& x) const {
  if (static_cast<std::size_t>(x.size()) != size()) throw InvalidArgument("operator/vector size mismatch");
  if (is_diagonal()) return (diagonal_entries().array() * x.array()).matrix();
  return matrix() * x;
}

GalerkinVector LinearOp::apply(const GalerkinVector& x) const {
  return GalerkinVector(x.scale(), apply(x.coefficients()));
}

LinearOp LinearOp::operator*(const LinearOp& rhs) const {
  if (size() != rhs.size()) throw InvalidArgument("operator size mismatch");
  if (is_diagonal() && rhs.is_diagonal())
    return diagonal((diagonal_entries().array() * rhs.diagonal_entries().array()).matrix());
  if (is_diagonal()) return dense(diagonal_entries().asDiagonal() * rhs.matrix());
  if (rhs.is_diagonal()) return dense(matrix() * rhs.diagonal_entries().asDiagonal());
  return dense(matrix() * rhs.matrix());
}

LinearOp LinearOp::operator+(const LinearOp& rhs) const {
  if (size() != rhs.size()) throw InvalidArgument("operator size mismatch");
  if (is_diagonal() && rhs.is_diagonal()) return diagonal(diagonal_entries() + rhs.diagonal_entries());
  return dense(to_dense() + rhs.to_dense());
}

LinearOp LinearOp::operator-(const LinearOp& rhs) const { return *this + rhs.scaled(-1.0); }

LinearOp LinearOp::scaled(Complex factor) const {
  if (is_diagonal()) return diagonal(diagonal_entries() * factor);
  return dense(matrix() * factor);
}

double operator_norm(const LinearOp& op, const SpectralScale& scale, double from_beta, double to_beta) {
  if (op.size() != scale.size()) throw InvalidArgument("operator does not match the scale");
  const Eigen::VectorXd ratio = scale.weights(to_beta).cwiseQuotient(scale.weights(from_beta));
  if (op.is_diagonal()) return (op.diagonal_entries().cwiseAbs().cwiseProduct(ratio)).maxCoeff();
  const Eigen::VectorXd wt = scale.weights(to_beta);
  const Eigen::VectorXd wf_inv = scale.weights(from_beta).cwiseInverse();
  const CMatrix weighted = wt.cast<Complex>().asDiagonal() * op.matrix() * wf_inv.cast<Complex>().asDiagonal();
  if (weighted.rows() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(weighted);
  return svd.singularValues()(0);
}

double operator_norm(const LinearOp& op, const SpectralScale& scale, double beta) {
  return operator_norm(op, scale, beta, beta);
}

double max_entry(const LinearOp& op) {
  if (op.is_diagonal()) return op.diagonal_entries().cwiseAbs().maxCoeff();
  return op.matrix().cwiseAbs().maxCoeff();
}

namespace {

// Diagonal Pade [m/m] numerator coefficients for m = 3, 5, 7, 9 and their norm bounds.
struct PadeRule {
  double theta;
  std::vector<double> b;
};

const std::vector<PadeRule>& low_degree_rules() {
  static const std::vector<PadeRule> rules = {
      {1.495585217958292e-2, {120.0, 60.0, 12.0, 1.0}},
      {2.539398330063230e-1, {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0}},
      {9.504178996162932e-1, {17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0}},
      {2.097847961257068,
       {17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0, 2162160.0, 110880.0, 3960.0, 90.0,
        1.0}},
  };
  return rules;
}

}  // namespace

CMatrix expm(const CMatrix& a) {
  // Higham (2005) scaling and squaring.
  static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                 1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,       1323241920.0,
                                 40840800.0,          960960.0,            16380.0,
                                 182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;
  const Eigen::Index n = a.rows();
  if (n == 0) return a;
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  const CMatrix id = CMatrix::Identity(n, n);
  for (const auto& rule : low_degree_rules()) {
    if (norm1 > rule.theta) continue;
    const CMatrix a2 = a * a;
    CMatrix power = id;
    CMatrix u = CMatrix::Zero(n, n), v = CMatrix::Zero(n, n);
    for (std::size_t j = 0; j + 1 < rule.b.size(); j += 2) {
      v += rule.b[j] * power;
      u += rule.b[j + 1] * power;
      power = power * a2;
    }
    u = a * u;
    return (v - u).partialPivLu().solve(v + u);
  }
  int squarings = 0;
  if (norm1 > theta13) squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / theta13))));
  const CMatrix as = a / std::ldexp(1.0, squarings);
  const CMatrix a2 = as * as;
  const CMatrix a4 = a2 * a2;
  const CMatrix a6 = a4 * a2;
  const CMatrix u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id;
  const CMatrix u = as * u_inner;
  const CMatrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
  CMatrix r = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) r = r * r;
  return r;
}

LinearOp expm(const LinearOp& a) {
  if (a.is_diagonal()) return LinearOp::diagonal(a.diagonal_entries().array().exp().matrix());
  return LinearOp::dense(expm(a.matrix()));
}

double spectral_abscissa(const LinearOp& a) {
  if (a.is_diagonal()) return a.diagonal_entries().real().maxCoeff();
  Eigen::ComplexEigenSolver<CMatrix> es(a.matrix(), false);
  return es.eigenvalues().real().maxCoeff();
}

}  // namespace roughevo
