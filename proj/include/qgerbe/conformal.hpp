#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include <Eigen/Geometry>
#include <Eigen/QR>

#include "qgerbe/rotation.hpp"

namespace qgerbe {

/**
 * The class of p (x) q modulo (p, q) ~ (r p, q / r) for real r != 0, i.e.
 * an element of R+ SO(4) acting by v -> p v q.
 *
 * The representative is gauge-fixed: |p| = |q| = sqrt(lambda), where lambda
 * is the scale factor of the map, and p carries the canonical sign.
 */
template <typename Scalar>
class ConformalElement {
public:
  ConformalElement() : p_(Quat<Scalar>::one()), q_(Quat<Scalar>::one()), lambda_(1) {}

  /// Any nonzero (p, q); the representative is normalized on construction.
  ConformalElement(const Quat<Scalar>& p, const Quat<Scalar>& q)
  {
    const Scalar np = p.norm();
    const Scalar nq = q.norm();
    if (!(np > Scalar(0)) || !(nq > Scalar(0)))
      throw Error(Errc::ZeroQuaternion, "conformal factor pair with a zero quaternion");
    lambda_ = np * nq;
    const Scalar root = std::sqrt(lambda_);
    p_ = p * (root / np);
    q_ = q * (root / nq);
    if (canonical_sign(p_) != p_) {
      p_ = -p_;
      q_ = -q_;
    }
  }

  static ConformalElement identity() { return {}; }

  const Quat<Scalar>& p() const { return p_; }
  const Quat<Scalar>& q() const { return q_; }
  Scalar lambda() const { return lambda_; }

  Matrix4<Scalar> matrix() const { return phi_matrix(p_, q_); }

  /// Composition of maps: (a * b)(v) = a(b(v)).
  ConformalElement operator*(const ConformalElement& b) const
  {
    return ConformalElement(p_ * b.p_, b.q_ * q_);
  }

  ConformalElement inverse() const { return ConformalElement(p_.inverse(), q_.inverse()); }

  Quat<Scalar> operator()(const Quat<Scalar>& v) const { return p_ * v * q_; }

  /// Distance between normalized representatives, blind to the (p, q) ~ (-p, -q)
  /// sign gauge.
  Scalar distance(const ConformalElement& o) const
  {
    const Scalar same = std::sqrt((p_ - o.p_).squared_norm() + (q_ - o.q_).squared_norm());
    const Scalar flip = std::sqrt((p_ + o.p_).squared_norm() + (q_ + o.q_).squared_norm());
    return std::min(same, flip);
  }

private:
  Quat<Scalar> p_, q_;
  Scalar lambda_;
};

using ConformalElementd = ConformalElement<double>;

/// Relative deviation ||M^T M - lambda^2 I|| / lambda^2 with lambda^2 = tr(M^T M)/4.
/// Infinity if M is zero or non-finite.
template <typename Scalar>
Scalar conformal_residual(const Matrix4<Scalar>& m)
{
  const Matrix4<Scalar> gram = m.transpose() * m;
  const Scalar lambda2 = gram.trace() / Scalar(4);
  if (!(lambda2 > Scalar(0)) || !std::isfinite(lambda2))
    return std::numeric_limits<Scalar>::infinity();
  return (gram - lambda2 * Matrix4<Scalar>::Identity()).norm() / lambda2;
}

/// Returns the scale factor lambda if m lies in R+ SO(4) up to tol, nothing otherwise.
template <typename Scalar>
std::optional<Scalar> is_conformal(const Matrix4<Scalar>& m, Scalar tol)
{
  if (conformal_residual(m) > tol)
    return std::nullopt;
  if (!(m.determinant() > Scalar(0)))
    return std::nullopt;
  return std::sqrt((m.transpose() * m).trace() / Scalar(4));
}

/**
 * Recovers the normalized factor pair of a conformal matrix.
 *
 * With M = lambda R, R in SO(4): R(1) = p q for unit p, q, and
 * R(v) R(1)^-1 = p v p^-1 is a rotation of the imaginary part from which p
 * is read off. q = p^-1 R(1). One Gauss-Newton step on ||phi(p, q) - M||
 * then polishes the pair.
 */
template <typename Scalar>
ConformalElement<Scalar> conformal_factorize(const Matrix4<Scalar>& m, Scalar tol = Scalar(1e-9))
{
  using Q = Quat<Scalar>;
  const auto lambda = is_conformal(m, tol);
  if (!lambda) {
    std::ostringstream os;
    os << "matrix is not in R+SO(4) (residual " << conformal_residual(m)
       << ", det " << m.determinant() << ")";
    throw Error(Errc::NotConformal, os.str());
  }

  const Matrix4<Scalar> rot = m / *lambda;
  const Q image_of_one = Q::from_coeffs(rot.col(0)).normalized();
  const Q one_inv = image_of_one.conj();

  Matrix3<Scalar> inner;
  for (int a = 1; a < 4; ++a) {
    const Q image = Q::from_coeffs(rot.col(a)) * one_inv;
    inner.col(a - 1) << image.x, image.y, image.z;
  }
  const Eigen::Quaternion<Scalar> eq(inner);
  const Q p_unit = Q(eq.w(), eq.x(), eq.y(), eq.z()).normalized();
  const Q q_unit = p_unit.conj() * image_of_one;

  const Scalar root = std::sqrt(*lambda);
  Q p = p_unit * root;
  Q q = q_unit * root;

  // Gauss-Newton polish. phi is bilinear, so the Jacobian columns are exact.
  Eigen::Matrix<Scalar, 16, 8> jac;
  for (int a = 0; a < 4; ++a) {
    const Matrix4<Scalar> dp = phi_matrix(Q::basis(a), q);
    const Matrix4<Scalar> dq = phi_matrix(p, Q::basis(a));
    jac.col(a) = Eigen::Map<const Eigen::Matrix<Scalar, 16, 1>>(dp.data());
    jac.col(4 + a) = Eigen::Map<const Eigen::Matrix<Scalar, 16, 1>>(dq.data());
  }
  const Matrix4<Scalar> diff = phi_matrix(p, q) - m;
  const Eigen::Matrix<Scalar, 16, 1> residual = Eigen::Map<const Eigen::Matrix<Scalar, 16, 1>>(diff.data());
  const Eigen::Matrix<Scalar, 8, 1> step = jac.completeOrthogonalDecomposition().solve(-residual);
  const Q p_new = p + Q::from_coeffs(step.template head<4>());
  const Q q_new = q + Q::from_coeffs(step.template tail<4>());
  if ((phi_matrix(p_new, q_new) - m).norm() < diff.norm()) {
    p = p_new;
    q = q_new;
  }

  ConformalElement<Scalar> result(p, q);
  const Scalar err = (result.matrix() - m).norm();
  if (!(err <= tol * m.norm())) {
    std::ostringstream os;
    os << "reconstruction residual " << err / m.norm() << " exceeds " << tol;
    throw Error(Errc::FactorizationUnstable, os.str());
  }
  return result;
}

} // namespace qgerbe
