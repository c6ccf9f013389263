#pragma once

#include <array>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "qgerbe/conformal.hpp"

namespace qgerbe {

/**
 * A morphism p : alpha -> delta(p) alpha of the structure groupoid, whose
 * objects are rotations and whose arrows are nonzero quaternions.
 *
 * Only the source is stored; the target is always derived.
 */
template <typename Scalar>
struct GroupoidMorphism {
  Quat<Scalar> p = Quat<Scalar>::one();
  Rotation3<Scalar> source;

  GroupoidMorphism() = default;
  GroupoidMorphism(const Quat<Scalar>& value, const Rotation3<Scalar>& src) : p(value), source(src)
  {
    if (!(p.squared_norm() > Scalar(0)))
      throw Error(Errc::ZeroQuaternion, "groupoid morphisms are nonzero quaternions");
  }

  static GroupoidMorphism identity(const Rotation3<Scalar>& object) { return {Quat<Scalar>::one(), object}; }

  Rotation3<Scalar> target() const { return delta(p) * source; }

  GroupoidMorphism inverse() const { return {p.inverse(), target()}; }
};

using GroupoidMorphismd = GroupoidMorphism<double>;

/// second o first; requires target(first) == source(second) up to tol.
template <typename Scalar>
GroupoidMorphism<Scalar> compose(const GroupoidMorphism<Scalar>& second,
                                 const GroupoidMorphism<Scalar>& first,
                                 Scalar tol = Scalar(1e-12))
{
  const Rotation3<Scalar> middle = first.target();
  if (!middle.approx_equal(second.source, tol)) {
    std::ostringstream os;
    os << "target " << middle.versor() << " does not match source " << second.source.versor();
    throw Error(Errc::NonComposable, os.str());
  }
  return {second.p * first.p, first.source};
}

/// Monoidal product (p, a) (x) (q, b) = (p a[q], a b).
template <typename Scalar>
GroupoidMorphism<Scalar> tensor(const GroupoidMorphism<Scalar>& m1, const GroupoidMorphism<Scalar>& m2)
{
  return {m1.p * m1.source(m2.p), m1.source * m2.source};
}

/// (p, delta(u)) -> class of (p u) (x) u^-1 in R+ SO(4).
template <typename Scalar>
ConformalElement<Scalar> to_conformal(const GroupoidMorphism<Scalar>& m)
{
  const Quat<Scalar>& u = m.source.versor();
  return ConformalElement<Scalar>(m.p * u, u.conj());
}

/// Inverse of to_conformal: the class of a (x) b comes from (a b, delta(b^-1)).
template <typename Scalar>
GroupoidMorphism<Scalar> from_conformal(const ConformalElement<Scalar>& c)
{
  return {c.p() * c.q(), delta(c.q().conj())};
}

/**
 * A real four dimensional H-bimodule given by the images of i, j, k under
 * the left action and under the right action.
 *
 * The right action is a right action: R(pq) = R(q) R(p).
 */
template <typename Scalar>
class Bimodule {
public:
  using Mat = Matrix4<Scalar>;

  /// Validates the algebra relations and commutation; throws DegenerateBimodule.
  Bimodule(const std::array<Mat, 3>& left, const std::array<Mat, 3>& right, Scalar tol = Scalar(1e-9))
    : left_(left), right_(right)
  {
    validate(tol);
  }

  const std::array<Mat, 3>& left_generators() const { return left_; }
  const std::array<Mat, 3>& right_generators() const { return right_; }

  /// Left action of an arbitrary quaternion (real-linear extension).
  Mat left(const Quat<Scalar>& p) const
  {
    return p.w * Mat::Identity() + p.x * left_[0] + p.y * left_[1] + p.z * left_[2];
  }

  Mat right(const Quat<Scalar>& q) const
  {
    return q.w * Mat::Identity() + q.x * right_[0] + q.y * right_[1] + q.z * right_[2];
  }

private:
  void validate(Scalar tol) const
  {
    const Mat id = Mat::Identity();
    Scalar worst = 0;
    for (int g = 0; g < 3; ++g) {
      const int h = (g + 1) % 3;
      const int k = (g + 2) % 3;
      worst = std::max(worst, (left_[g] * left_[g] + id).norm());
      worst = std::max(worst, (right_[g] * right_[g] + id).norm());
      // ij = k cyclically; for a right action R(i)R(j) = R(ji) = -R(k).
      worst = std::max(worst, (left_[g] * left_[h] - left_[k]).norm());
      worst = std::max(worst, (right_[g] * right_[h] + right_[k]).norm());
      for (int r = 0; r < 3; ++r)
        worst = std::max(worst, (left_[g] * right_[r] - right_[r] * left_[g]).norm());
    }
    if (!(worst <= tol)) {
      std::ostringstream os;
      os << "actions violate the bimodule relations (residual " << worst << ")";
      throw Error(Errc::DegenerateBimodule, os.str());
    }
  }

  std::array<Mat, 3> left_, right_;
};

using Bimoduled = Bimodule<double>;

template <typename Scalar>
Bimodule<Scalar> standard_bimodule()
{
  using Q = Quat<Scalar>;
  return Bimodule<Scalar>({left_matrix(Q::i()), left_matrix(Q::j()), left_matrix(Q::k())},
                          {right_matrix(Q::i()), right_matrix(Q::j()), right_matrix(Q::k())});
}

/// Standard bimodule with the left action twisted: p . v = alpha[p] v.
template <typename Scalar>
Bimodule<Scalar> twist_bimodule(const Rotation3<Scalar>& alpha)
{
  using Q = Quat<Scalar>;
  return Bimodule<Scalar>({left_matrix(alpha(Q::i())), left_matrix(alpha(Q::j())), left_matrix(alpha(Q::k()))},
                          {right_matrix(Q::i()), right_matrix(Q::j()), right_matrix(Q::k())});
}

/// A vector e with p.e = e.p for all p; unit length, canonical sign.
template <typename Scalar>
struct Frame {
  Vector4<Scalar> e;
};

/// Rank decisions for frames use this relative singular-value cutoff.
inline constexpr double kRankTolerance = 1e-9;

/// Null space of the stacked system (L_g - R_g), g = i, j, k. Must be a line.
template <typename Scalar>
Frame<Scalar> identity_frame(const Bimodule<Scalar>& b)
{
  Eigen::Matrix<Scalar, 12, 4> system;
  for (int g = 0; g < 3; ++g)
    system.template block<4, 4>(4 * g, 0) = b.left_generators()[g] - b.right_generators()[g];

  const Eigen::JacobiSVD<Eigen::Matrix<Scalar, 12, 4>> svd(system, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const Scalar cutoff = Scalar(kRankTolerance) * std::max(sv(0), Scalar(1));
  int nullity = 0;
  for (int a = 0; a < 4; ++a)
    nullity += sv(a) <= cutoff ? 1 : 0;
  if (nullity != 1) {
    std::ostringstream os;
    os << "frame equations have nullity " << nullity << ", expected 1";
    throw Error(Errc::DegenerateBimodule, os.str());
  }
  const Vector4<Scalar> e = svd.matrixV().col(3).normalized();
  return {canonical_sign(Quat<Scalar>::from_coeffs(e)).coeffs()};
}

/**
 * Singular values, in decreasing order, of the linear system
 * X L_g = L_g X, X R_g = R_g X (g = i, j, k) in the 16 entries of X.
 * For a bimodule exactly one of them vanishes, the commutant being R Id.
 */
template <typename Scalar>
Eigen::Matrix<Scalar, 16, 1> commutant_singular_values(const Bimodule<Scalar>& b)
{
  Eigen::Matrix<Scalar, 96, 16> system = Eigen::Matrix<Scalar, 96, 16>::Zero();
  int block = 0;
  for (const auto* gens : {&b.left_generators(), &b.right_generators()}) {
    for (const auto& g : *gens) {
      // Row (a, c) of X G - G X; unknown X(r, s) sits in column r + 4 s.
      for (int a = 0; a < 4; ++a) {
        for (int c = 0; c < 4; ++c) {
          const int row = 16 * block + a + 4 * c;
          for (int m = 0; m < 4; ++m) {
            system(row, a + 4 * m) += g(m, c);
            system(row, m + 4 * c) -= g(a, m);
          }
        }
      }
      ++block;
    }
  }
  return Eigen::JacobiSVD<Eigen::Matrix<Scalar, 96, 16>>(system).singularValues();
}

/// The rotation that classifies a bimodule: delta of its frame read as a quaternion.
template <typename Scalar>
Rotation3<Scalar> classifier(const Bimodule<Scalar>& b)
{
  return delta(Quat<Scalar>::from_coeffs(identity_frame(b).e));
}

/// The automorphism p -> p^v defined by p.v = v.p^v, as a rotation.
/// Requires v != 0.
template <typename Scalar>
Rotation3<Scalar> automorphism_at(const Bimodule<Scalar>& b, const Vector4<Scalar>& v)
{
  Matrix4<Scalar> coords;
  for (int a = 0; a < 4; ++a)
    coords.col(a) = b.right(Quat<Scalar>::basis(a)) * v;
  const Eigen::FullPivLU<Matrix4<Scalar>> lu(coords);
  if (!lu.isInvertible())
    throw Error(Errc::DegenerateBimodule, "right action does not act freely on v");
  Matrix3<Scalar> m;
  for (int g = 1; g < 4; ++g) {
    const Vector4<Scalar> image = lu.solve(b.left(Quat<Scalar>::basis(g)) * v);
    m.col(g - 1) = image.template tail<3>();
  }
  const Eigen::Quaternion<Scalar> eq(m);
  return Rotation3<Scalar>(Quat<Scalar>(eq.w(), eq.x(), eq.y(), eq.z()));
}

/**
 * A (x)_H B realized on R^4 through the coordinates x -> [x (x) b0],
 * b0 = (1, 0, 0, 0) in B.
 *
 * The left action is that of A. For the right action, q moves across the
 * tensor sign as s(q) with s(q).b0 = b0.q, so it acts by R_A(s(q)).
 * The classifier of the result is classifier(A) * classifier(B).
 */
template <typename Scalar>
Bimodule<Scalar> bimodule_tensor(const Bimodule<Scalar>& a, const Bimodule<Scalar>& b)
{
  identity_frame(a);
  identity_frame(b);

  const Vector4<Scalar> b0 = Vector4<Scalar>::UnitX();
  Matrix4<Scalar> coords;
  for (int c = 0; c < 4; ++c)
    coords.col(c) = b.left(Quat<Scalar>::basis(c)) * b0;
  const Eigen::FullPivLU<Matrix4<Scalar>> lu(coords);
  if (!lu.isInvertible())
    throw Error(Errc::DegenerateBimodule, "left action of B is not free");

  std::array<Matrix4<Scalar>, 3> right;
  for (int g = 0; g < 3; ++g) {
    const Vector4<Scalar> s = lu.solve(b.right_generators()[g] * b0);
    right[g] = a.right(Quat<Scalar>::from_coeffs(s));
  }
  return Bimodule<Scalar>(a.left_generators(), right);
}

} // namespace qgerbe
