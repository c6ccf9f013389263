#include "support.hpp"

#include "qgerbe/hgroupoid.hpp"
#include "qgerbe/io.hpp"

namespace qgerbe {
namespace {

using test::matrix_near;
using test::quat_near;
using test::quat_near_up_to_sign;

bool same_morphism(const GroupoidMorphismd& a, const GroupoidMorphismd& b, double tol)
{
  return (a.p - b.p).norm() <= tol * std::max(1.0, b.p.norm()) && a.source.approx_equal(b.source, tol);
}

TEST(Compose, IdentityAndInverse)
{
  Rng rng(31);
  const Rotation3d beta(random_versor(rng));
  const GroupoidMorphismd q(random_nonzero_quat(rng), beta);
  const auto left = compose(GroupoidMorphismd::identity(q.target()), q);
  EXPECT_TRUE(same_morphism(left, q, 1e-15));

  const GroupoidMorphismd p(random_nonzero_quat(rng), Rotation3d(random_versor(rng)));
  const auto loop = compose(p.inverse(), p);
  EXPECT_TRUE(quat_near(loop.p, Quatd::one(), 1e-15));
  EXPECT_TRUE(loop.source.approx_equal(p.source));
  EXPECT_TRUE(p.inverse().source.approx_equal(delta(p.p) * p.source));
}

TEST(Compose, JAfterI)
{
  const Rotation3d alpha(Quatd(1, 2, 3, 4));
  const GroupoidMorphismd i(Quatd::i(), alpha);
  const GroupoidMorphismd j(Quatd::j(), i.target());
  const auto ji = compose(j, i);
  EXPECT_EQ(ji.p, -Quatd::k());
  EXPECT_EQ(ji.p, qmul(Quatd::j(), Quatd::i()));
  EXPECT_TRUE(ji.source.approx_equal(alpha));
  EXPECT_TRUE(ji.target().approx_equal(delta(Quatd::j()) * delta(Quatd::i()) * alpha));
}

TEST(Compose, MismatchThrows)
{
  const GroupoidMorphismd a(Quatd::i(), Rotation3d::identity());
  const GroupoidMorphismd b(Quatd::j(), Rotation3d::identity());
  try {
    compose(b, a);
    FAIL() << "expected NonComposable";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonComposable);
  }
}

TEST(Compose, GroupoidAxioms)
{
  Rng rng(32);
  for (int n = 0; n < 500; ++n) {
    const GroupoidMorphismd a(random_nonzero_quat(rng), Rotation3d(random_versor(rng)));
    const GroupoidMorphismd b(random_nonzero_quat(rng), a.target());
    const GroupoidMorphismd c(random_nonzero_quat(rng), b.target());
    EXPECT_TRUE(same_morphism(compose(c, compose(b, a)), compose(compose(c, b), a), 1e-12));
    EXPECT_TRUE(same_morphism(compose(a, GroupoidMorphismd::identity(a.source)), a, 1e-12));
    EXPECT_TRUE(same_morphism(compose(a.inverse(), a), GroupoidMorphismd::identity(a.source), 1e-12));
    EXPECT_TRUE(same_morphism(compose(a, a.inverse()), GroupoidMorphismd::identity(a.target()), 1e-12));
  }
}

TEST(Morphism, ZeroValueThrows)
{
  EXPECT_THROW(GroupoidMorphismd(Quatd(), Rotation3d::identity()), Error);
}

TEST(Tensor, Examples)
{
  Rng rng(33);
  const Quatd p = random_nonzero_quat(rng), q = random_nonzero_quat(rng);
  const Rotation3d beta(random_versor(rng));

  const auto unit = tensor(GroupoidMorphismd(), GroupoidMorphismd(q, beta));
  EXPECT_TRUE(same_morphism(unit, GroupoidMorphismd(q, beta), 1e-15));

  const auto plain = tensor(GroupoidMorphismd(p, Rotation3d()), GroupoidMorphismd(q, Rotation3d()));
  EXPECT_TRUE(quat_near(plain.p, qmul(p, q), 1e-14 * p.norm() * q.norm()));

  const Quatd u = random_versor(rng), v = random_versor(rng);
  const auto twisted = tensor(GroupoidMorphismd(p, delta(u)), GroupoidMorphismd(q, delta(v)));
  const Quatd expected = qmul(p, qmul(qmul(u, q), qinv(u)));
  EXPECT_TRUE(quat_near(twisted.p, expected, 1e-14 * p.norm() * q.norm()));
  EXPECT_TRUE(twisted.source.approx_equal(delta(qmul(u, v))));
}

TEST(Tensor, MonoidalAxioms)
{
  Rng rng(34);
  auto random_morphism = [&] { return GroupoidMorphismd(random_nonzero_quat(rng), Rotation3d(random_versor(rng))); };
  for (int n = 0; n < 500; ++n) {
    const auto a = random_morphism(), b = random_morphism(), c = random_morphism();
    EXPECT_TRUE(same_morphism(tensor(a, tensor(b, c)), tensor(tensor(a, b), c), 1e-12));
    EXPECT_TRUE(same_morphism(tensor(a, GroupoidMorphismd()), a, 1e-12));
    // delta(p a[q]) a b = (delta(p) a)(delta(q) b)
    EXPECT_TRUE(tensor(a, b).target().approx_equal(a.target() * b.target(), 1e-12));
  }
}

TEST(Tensor, NotCommutative)
{
  const GroupoidMorphismd a(Quatd::i(), Rotation3d::identity());
  const GroupoidMorphismd b(Quatd::j(), delta(Quatd::i()));
  const auto ab = tensor(a, b), ba = tensor(b, a);
  EXPECT_EQ(ab.p, Quatd::k());
  // j delta(i)[i] = j i = -k.
  EXPECT_EQ(ba.p, -Quatd::k());
  EXPECT_FALSE(same_morphism(ab, ba, 1e-6));
}

TEST(ToConformal, Examples)
{
  EXPECT_LE(to_conformal(GroupoidMorphismd()).distance(ConformalElementd()), 1e-15);
  const Quatd p(0.5, 1, -2, 0.25);
  EXPECT_LE(to_conformal(GroupoidMorphismd(p, Rotation3d())).distance(ConformalElementd(p, Quatd::one())), 1e-15);
}

TEST(ToConformal, MonoidIsomorphism)
{
  Rng rng(35);
  for (int n = 0; n < 500; ++n) {
    const GroupoidMorphismd a(random_nonzero_quat(rng), Rotation3d(random_versor(rng)));
    const GroupoidMorphismd b(random_nonzero_quat(rng), Rotation3d(random_versor(rng)));
    const Matrix4d product = to_conformal(a).matrix() * to_conformal(b).matrix();
    EXPECT_LE((to_conformal(tensor(a, b)).matrix() - product).norm(), 1e-10 * product.norm());
    EXPECT_TRUE(same_morphism(from_conformal(to_conformal(a)), a, 1e-10));
  }
}

TEST(ToConformal, IndependentOfVersorSign)
{
  const Quatd u = Quatd(1, -1, 2, 0.5).normalized();
  const Quatd p(2, 0, 1, -1);
  // The class of (p u) (x) u^-1 computed from -u directly.
  const ConformalElementd other(p * -u, (-u).conj());
  EXPECT_LE(to_conformal(GroupoidMorphismd(p, Rotation3d(u))).distance(other), 1e-14);
}

TEST(Bimodule, TwistExamples)
{
  const auto standard = standard_bimodule<double>();
  const auto twisted_id = twist_bimodule(Rotation3d::identity());
  for (int g = 0; g < 3; ++g) {
    EXPECT_TRUE(matrix_near(twisted_id.left_generators()[g], standard.left_generators()[g], 1e-15));
    EXPECT_TRUE(matrix_near(twisted_id.right_generators()[g], standard.right_generators()[g], 1e-15));
  }
  Rng rng(36);
  const Quatd u = random_versor(rng);
  const auto b = twist_bimodule(delta(u));
  for (int n = 0; n < 20; ++n) {
    const Quatd p = random_quat(rng), v = random_quat(rng);
    const Quatd want = qmul(qmul(qmul(u, p), qinv(u)), v);
    EXPECT_TRUE(quat_near(apply(b.left(p), v), want, 1e-12 * p.norm() * v.norm()));
  }
}

TEST(Bimodule, InvalidActionsThrow)
{
  const auto s = standard_bimodule<double>();
  try {
    Bimoduled(s.left_generators(), s.left_generators());
    FAIL() << "expected DegenerateBimodule";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DegenerateBimodule);
  }
}

TEST(Frame, Standard)
{
  const auto e = identity_frame(standard_bimodule<double>()).e;
  EXPECT_LE((e - Vector4d::UnitX()).norm(), 1e-14);
}

TEST(Frame, TwistIsLineOfU)
{
  Rng rng(37);
  for (int n = 0; n < 300; ++n) {
    const Quatd u = random_versor(rng);
    const auto b = twist_bimodule(delta(u));
    const Vector4d e = identity_frame(b).e;
    EXPECT_TRUE(quat_near_up_to_sign(Quatd::from_coeffs(e), u, 1e-10));
    for (int g = 1; g < 4; ++g) {
      const Quatd p = Quatd::basis(g);
      EXPECT_LE((b.left(p) * e - b.right(p) * e).norm(), 1e-12);
    }
    EXPECT_TRUE(automorphism_at(b, e).approx_equal(Rotation3d::identity(), 1e-10));
    EXPECT_TRUE(classifier(b).approx_equal(delta(u), 1e-10));
  }
}

TEST(Frame, SimilarBimoduleGivesSameLine)
{
  const Quatd u = Quatd(0.3, 1, -0.2, 0.6).normalized();
  const auto b = twist_bimodule(delta(u));
  const Matrix4d t = 3.0 * Matrix4d::Identity();
  std::array<Matrix4d, 3> left, right;
  for (int g = 0; g < 3; ++g) {
    left[g] = t * b.left_generators()[g] * t.inverse();
    right[g] = t * b.right_generators()[g] * t.inverse();
  }
  const Vector4d e = identity_frame(Bimoduled(left, right)).e;
  EXPECT_TRUE(quat_near_up_to_sign(Quatd::from_coeffs(e), u, 1e-10));
}

TEST(Frame, AutomorphismAtOtherVectors)
{
  // In the standard bimodule p . v = v . (v^-1 p v), so p -> p^v is delta(v^-1).
  const Quatd v(1, 2, 0, -1);
  const auto rot = automorphism_at(standard_bimodule<double>(), v.coeffs());
  EXPECT_TRUE(rot.approx_equal(delta(v.inverse()), 1e-12));
}

TEST(BimoduleTensor, Classes)
{
  const auto ss = bimodule_tensor(standard_bimodule<double>(), standard_bimodule<double>());
  EXPECT_TRUE(classifier(ss).approx_equal(Rotation3d::identity(), 1e-12));

  Rng rng(38);
  for (int n = 0; n < 200; ++n) {
    const Rotation3d alpha(random_versor(rng)), beta(random_versor(rng));
    const auto ab = bimodule_tensor(twist_bimodule(alpha), twist_bimodule(beta));
    // The groupoid product of the objects.
    const auto objects = tensor(GroupoidMorphismd::identity(alpha), GroupoidMorphismd::identity(beta));
    EXPECT_TRUE(classifier(ab).approx_equal(objects.source, 1e-9));
    const auto inv = bimodule_tensor(twist_bimodule(alpha), twist_bimodule(alpha.inverse()));
    EXPECT_TRUE(classifier(inv).approx_equal(Rotation3d::identity(), 1e-9));
  }
}

TEST(Json, MorphismAndBimoduleRoundtrip)
{
  Rng rng(39);
  const GroupoidMorphismd m(random_nonzero_quat(rng), Rotation3d(random_versor(rng)));
  const auto m2 = io::morphism_from_json(io::json::parse(io::to_json(m).dump()));
  EXPECT_TRUE(same_morphism(m2, m, 1e-15));

  const auto b = twist_bimodule(Rotation3d(random_versor(rng)));
  const auto b2 = io::bimodule_from_json(io::json::parse(io::to_json(b).dump()));
  for (int g = 0; g < 3; ++g)
    EXPECT_TRUE(matrix_near(b2.left_generators()[g], b.left_generators()[g], 1e-15));

  io::json bad = io::to_json(b);
  bad["Li"] = io::to_json(Quatd::one());
  EXPECT_THROW(io::bimodule_from_json(bad), Error);
}

} // namespace
} // namespace qgerbe
