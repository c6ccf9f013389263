#pragma once

#include <algorithm>

#include "qgerbe/quat.hpp"

namespace qgerbe {

/**
 * An inner automorphism v -> u v u^-1 of the quaternions, i.e. an element of
 * SO(3) acting on the imaginary part and fixing the real line.
 *
 * Stored as a versor u with the canonical sign, so that u and -u give the
 * same value. Composition is the versor product: (a * b)[v] = a[b[v]].
 */
template <typename Scalar>
class Rotation3 {
public:
  Rotation3() : versor_(Quat<Scalar>::one()) {}

  /// Normalizes u; throws ZeroQuaternion for u = 0.
  explicit Rotation3(const Quat<Scalar>& u) : versor_(canonical_sign(u.normalized())) {}

  static Rotation3 identity() { return {}; }

  const Quat<Scalar>& versor() const { return versor_; }

  Rotation3 inverse() const { return Rotation3(versor_.conj()); }

  Rotation3 operator*(const Rotation3& other) const { return Rotation3(versor_ * other.versor_); }

  /// The automorphism applied to a quaternion.
  Quat<Scalar> operator()(const Quat<Scalar>& v) const { return versor_ * v * versor_.conj(); }

  /// Action on the imaginary part, columns are the images of i, j, k.
  Matrix3<Scalar> matrix() const
  {
    return phi_matrix(versor_, versor_.conj()).template bottomRightCorner<3, 3>();
  }

  /// Versor distance that is blind to the +-u ambiguity.
  Scalar versor_distance(const Rotation3& other) const
  {
    return std::min((versor_ - other.versor_).norm(), (versor_ + other.versor_).norm());
  }

  bool approx_equal(const Rotation3& other, Scalar tol = Scalar(1e-12)) const
  {
    return versor_distance(other) <= tol;
  }

private:
  Quat<Scalar> versor_;
};

using Rotation3d = Rotation3<double>;

/// Frobenius distance between the 3x3 matrices of two rotations.
template <typename Scalar>
Scalar rotation_residual(const Rotation3<Scalar>& a, const Rotation3<Scalar>& b)
{
  return (a.matrix() - b.matrix()).norm();
}

/// The crossed-module map: p -> (v -> p v p^-1). Real multiples of p give the
/// same rotation.
template <typename Scalar>
Rotation3<Scalar> delta(const Quat<Scalar>& p)
{
  if (!(p.squared_norm() > Scalar(0)))
    throw Error(Errc::ZeroQuaternion, "delta of the zero quaternion");
  return Rotation3<Scalar>(p);
}

} // namespace qgerbe
