#include "roughevo/sewing.hpp"

#include <cmath>
#include <iomanip>

namespace roughevo {

void write_sew_history_csv(std::ostream& os, const std::vector<SewLevel>& history) {
  os << std::setprecision(17) << "level,mesh,cauchy_residual,ratio\n";
  for (const auto& h : history) os << h.level << "," << h.mesh << "," << h.residual << "," << h.ratio << "\n";
}

double maximal_inequality_factor(double z) {
  if (!(z > 1.0)) throw InvalidArgument("zeta factor needs z > 1");
  return std::pow(2.0, z) * std::riemann_zeta(z);
}

double OperatorMonoid::distance(const LinearOp& a, const LinearOp& b) const {
  return operator_norm(a - b, *scale_, beta_);
}

double OperatorMonoid::size(const LinearOp& a) const { return operator_norm(a, *scale_, beta_); }

LinearOp OperatorMonoid::combine(const LinearOp& a, double x, const LinearOp& b, double y) const {
  return a.scaled(x) + b.scaled(y);
}

AffineElement AffineMonoid::compose(const AffineElement& a, const AffineElement& b) const {
  return AffineElement{a.op * b.op, a.shift + a.op.apply(b.shift)};
}

AffineElement AffineMonoid::unit() const {
  const auto n = static_cast<Eigen::Index>(scale_->size());
  return AffineElement{LinearOp::identity(scale_->size()), CVector::Zero(n)};
}

double AffineMonoid::distance(const AffineElement& a, const AffineElement& b) const {
  return operator_norm(a.op - b.op, *scale_, beta_) + weighted_norm(*scale_, a.shift - b.shift, beta_);
}

double AffineMonoid::size(const AffineElement& a) const {
  return std::max(1.0, operator_norm(a.op, *scale_, beta_) + weighted_norm(*scale_, a.shift, beta_));
}

AffineElement AffineMonoid::combine(const AffineElement& a, double x, const AffineElement& b, double y) const {
  return AffineElement{a.op.scaled(x) + b.op.scaled(y), x * a.shift + y * b.shift};
}

AffineSewResult affine_sew(const ScalePtr& scale, const VectorGerm& xi, const OperatorGerm& propagator, double gamma,
                           double beta, double s, double t, const SewOptions& opt) {
  if (!(3.0 * gamma > 1.0)) throw InvalidArgument("affine sewing needs 3 gamma > 1");
  const AffineMonoid monoid(scale, beta);
  const Germ<AffineElement> mu = [&](double u, double v) {
    LinearOp op = propagator(u, v);
    CVector shift = op.apply(xi(u, v));
    return AffineElement{std::move(op), std::move(shift)};
  };
  AffineSewResult out;
  out.sew = multiplicative_sew(monoid, mu, control_linear(1.0), 3.0 * gamma, s, t, opt);
  out.value = out.sew.value.shift;
  return out;
}

}  // namespace roughevo
