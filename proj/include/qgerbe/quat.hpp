#pragma once

#include <cmath>
#include <ostream>

#include <Eigen/Core>

#include "qgerbe/error.hpp"

namespace qgerbe {

template <typename Scalar>
using Vector4 = Eigen::Matrix<Scalar, 4, 1>;

/// Real-linear endomorphisms of the quaternions, row-major semantics on the
/// ordered basis (1, i, j, k). Eigen storage order is irrelevant to callers.
template <typename Scalar>
using Matrix4 = Eigen::Matrix<Scalar, 4, 4>;

template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

/**
 * A quaternion w + x i + y j + z k.
 *
 * Arithmetic follows Hamilton's convention, i^2 = j^2 = k^2 = ijk = -1.
 * The type is a plain aggregate of four scalars; products are not
 * commutative.
 */
template <typename Scalar>
struct Quat {
  Scalar w{0}, x{0}, y{0}, z{0};

  constexpr Quat() = default;
  constexpr Quat(Scalar w_, Scalar x_, Scalar y_, Scalar z_) : w(w_), x(x_), y(y_), z(z_) {}

  static constexpr Quat real(Scalar r) { return {r, 0, 0, 0}; }
  static constexpr Quat one() { return {1, 0, 0, 0}; }
  static constexpr Quat i() { return {0, 1, 0, 0}; }
  static constexpr Quat j() { return {0, 0, 1, 0}; }
  static constexpr Quat k() { return {0, 0, 0, 1}; }

  /// The a-th basis element of (1, i, j, k).
  static constexpr Quat basis(int a)
  {
    Quat q;
    q[a] = 1;
    return q;
  }

  static Quat from_coeffs(const Vector4<Scalar>& c) { return {c(0), c(1), c(2), c(3)}; }
  Vector4<Scalar> coeffs() const { return {w, x, y, z}; }

  constexpr Scalar& operator[](int a) { return a == 0 ? w : a == 1 ? x : a == 2 ? y : z; }
  constexpr Scalar operator[](int a) const { return a == 0 ? w : a == 1 ? x : a == 2 ? y : z; }

  constexpr Quat conj() const { return {w, -x, -y, -z}; }
  constexpr Scalar squared_norm() const { return w * w + x * x + y * y + z * z; }
  Scalar norm() const { return std::sqrt(squared_norm()); }

  Quat inverse() const
  {
    const Scalar n2 = squared_norm();
    if (!(n2 > Scalar(0)))
      throw Error(Errc::ZeroQuaternion, "inverse of the zero quaternion");
    return conj() / n2;
  }

  Quat normalized() const
  {
    const Scalar n = norm();
    if (!(n > Scalar(0)))
      throw Error(Errc::ZeroQuaternion, "normalizing the zero quaternion");
    return *this / n;
  }

  bool is_finite() const
  {
    return std::isfinite(w) && std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }

  constexpr Quat operator-() const { return {-w, -x, -y, -z}; }
  constexpr Quat operator+(const Quat& o) const { return {w + o.w, x + o.x, y + o.y, z + o.z}; }
  constexpr Quat operator-(const Quat& o) const { return {w - o.w, x - o.x, y - o.y, z - o.z}; }
  constexpr Quat operator*(Scalar s) const { return {w * s, x * s, y * s, z * s}; }
  constexpr Quat operator/(Scalar s) const { return {w / s, x / s, y / s, z / s}; }

  constexpr Quat operator*(const Quat& q) const
  {
    return {w * q.w - x * q.x - y * q.y - z * q.z,
            w * q.x + x * q.w + y * q.z - z * q.y,
            w * q.y - x * q.z + y * q.w + z * q.x,
            w * q.z + x * q.y - y * q.x + z * q.w};
  }

  Quat& operator+=(const Quat& o) { return *this = *this + o; }
  Quat& operator*=(const Quat& o) { return *this = *this * o; }

  constexpr bool operator==(const Quat&) const = default;
};

template <typename Scalar>
constexpr Quat<Scalar> operator*(Scalar s, const Quat<Scalar>& q)
{
  return q * s;
}

template <typename Scalar>
std::ostream& operator<<(std::ostream& os, const Quat<Scalar>& q)
{
  return os << '[' << q.w << ", " << q.x << ", " << q.y << ", " << q.z << ']';
}

using Quatd = Quat<double>;
using Matrix4d = Matrix4<double>;
using Vector4d = Vector4<double>;
using Matrix3d = Matrix3<double>;

template <typename Scalar>
constexpr Quat<Scalar> qmul(const Quat<Scalar>& p, const Quat<Scalar>& q)
{
  return p * q;
}

template <typename Scalar>
Quat<Scalar> qinv(const Quat<Scalar>& p)
{
  return p.inverse();
}

/// Matrix of v -> p v.
template <typename Scalar>
Matrix4<Scalar> left_matrix(const Quat<Scalar>& p)
{
  Matrix4<Scalar> m;
  m << p.w, -p.x, -p.y, -p.z,
       p.x,  p.w, -p.z,  p.y,
       p.y,  p.z,  p.w, -p.x,
       p.z, -p.y,  p.x,  p.w;
  return m;
}

/// Matrix of v -> v q.
template <typename Scalar>
Matrix4<Scalar> right_matrix(const Quat<Scalar>& q)
{
  Matrix4<Scalar> m;
  m << q.w, -q.x, -q.y, -q.z,
       q.x,  q.w,  q.z, -q.y,
       q.y, -q.z,  q.w,  q.x,
       q.z,  q.y, -q.x,  q.w;
  return m;
}

/// The bimodule map p (x) q  ->  (v -> p v q) as a matrix on (1, i, j, k).
template <typename Scalar>
Matrix4<Scalar> phi_matrix(const Quat<Scalar>& p, const Quat<Scalar>& q)
{
  return left_matrix(p) * right_matrix(q);
}

template <typename Scalar>
Quat<Scalar> apply(const Matrix4<Scalar>& m, const Quat<Scalar>& v)
{
  return Quat<Scalar>::from_coeffs(m * v.coeffs());
}

/// Tolerance below which a component is treated as zero when choosing the
/// canonical sign of a quaternion up to +-1 (relative to its norm).
inline constexpr double kSignTolerance = 1e-12;

/// Sign-normalizes q so that its first component that is nonzero (relative
/// to |q| and kSignTolerance) is positive.
template <typename Scalar>
Quat<Scalar> canonical_sign(const Quat<Scalar>& q)
{
  const Scalar cutoff = Scalar(kSignTolerance) * q.norm();
  for (int a = 0; a < 4; ++a) {
    if (std::abs(q[a]) > cutoff)
      return q[a] < Scalar(0) ? -q : q;
  }
  return q;
}

} // namespace qgerbe
