#include "support.hpp"

#include "qgerbe/atlas.hpp"
#include "qgerbe/io.hpp"

namespace qgerbe {
namespace {

using test::matrix_near;
using test::quat_near;
using test::quat_near_up_to_sign;

const char* const kConformalFamilies[] = {"s4_stereo", "affine", "torus_identity", "synthetic_conformal"};

Errc code_of(const std::function<void()>& fn)
{
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::ParseError;
}

TEST(TransitionEval, Examples)
{
  const Quatd x(0.5, -1, 2, 0.25);
  EXPECT_EQ(transition_eval(TransitionMap{}, x), x);
  EXPECT_EQ(transition_eval(TransitionMap{{Step::invert()}}, Quatd::one()), Quatd::one());
  const TransitionMap lr{{Step::left_mul(Quatd::i()), Step::right_mul(Quatd::j())}};
  EXPECT_EQ(transition_eval(lr, Quatd::one()), qmul(qmul(Quatd::i(), Quatd::one()), Quatd::j()));
  EXPECT_EQ(transition_eval(lr, Quatd::one()), Quatd::k());
  EXPECT_EQ(code_of([] { transition_eval(TransitionMap{{Step::invert()}}, Quatd()); }), Errc::PoleHit);
}

TEST(TransitionEval, ThenComposes)
{
  const TransitionMap f{{Step::translate(Quatd::i()), Step::invert()}};
  const TransitionMap g{{Step::left_mul(Quatd(1, 1, 0, 0))}};
  const Quatd x(0.3, 0.2, -0.4, 1);
  EXPECT_TRUE(quat_near(transition_eval(f.then(g), x), transition_eval(g, transition_eval(f, x)), 1e-15));
}

TEST(Jacobian, Examples)
{
  const Quatd x(0.3, 0.2, -0.4, 1);
  for (auto mode : {JacobianMode::Analytic, JacobianMode::FiniteDifference}) {
    EXPECT_TRUE(matrix_near(jacobian(TransitionMap{{Step::translate(Quatd(1, 2, 3, 4))}}, x, mode),
                            Matrix4d::Identity(), 1e-9));
    EXPECT_TRUE(matrix_near(jacobian(TransitionMap{{Step::invert()}}, Quatd::one(), mode),
                            -Matrix4d::Identity(), 1e-9));
  }
  const Quatd a(1, -2, 0.5, 3);
  EXPECT_EQ(jacobian(TransitionMap{{Step::left_mul(a)}}, x, JacobianMode::Analytic), phi_matrix(a, Quatd::one()));
}

TEST(Jacobian, InversionAgainstFiniteDifferences)
{
  Rng rng(51);
  for (int n = 0; n < 100; ++n) {
    const Quatd x = random_nonzero_quat(rng);
    const TransitionMap inv{{Step::invert()}};
    const Matrix4d a = jacobian(inv, x, JacobianMode::Analytic);
    const Matrix4d f = finite_difference_jacobian(inv, x, 1e-5 * std::max(1.0, x.norm()));
    EXPECT_LE((a - f).norm(), 1e-6 * a.norm());
  }
}

TEST(Jacobian, StepTooSmall)
{
  EXPECT_EQ(code_of([] { finite_difference_jacobian(TransitionMap{}, Quatd::one(), 1e-20); }), Errc::StepTooSmall);
}

TEST(Jacobian, ChainRule)
{
  Rng rng(52);
  for (int n = 0; n < 200; ++n) {
    const TransitionMap f{{Step::left_mul(random_nonzero_quat(rng)), Step::translate(random_quat(rng)),
                           Step::invert()}};
    const TransitionMap g{{Step::right_mul(random_nonzero_quat(rng)), Step::invert(),
                           Step::translate(random_quat(rng))}};
    const Quatd x = random_quat(rng);
    const Matrix4d whole = jacobian(f.then(g), x, JacobianMode::Analytic);
    const Matrix4d parts = jacobian(g, transition_eval(f, x), JacobianMode::Analytic) *
                           jacobian(f, x, JacobianMode::Analytic);
    EXPECT_LE((whole - parts).norm(), 1e-10 * parts.norm());
  }
}

TEST(Builtin, InvariantsHold)
{
  for (const char* name : kConformalFamilies) {
    const Atlas a = builtin_atlas(name, {0, 3, 30, 0});
    const AtlasCheck check = check_atlas(a);
    EXPECT_LE(check.inverse_residual, 1e-9) << name;
    EXPECT_LE(check.triple_residual, 1e-9) << name;
    EXPECT_NO_THROW(a.nerve()) << name;
  }
}

TEST(Builtin, Families)
{
  const Atlas s4 = builtin_atlas("s4_stereo", {});
  EXPECT_EQ(s4.chart_count, 2);
  ASSERT_EQ(s4.pairs.size(), 2u);
  EXPECT_EQ(s4.pairs[0].map.steps.size(), 1u);
  EXPECT_EQ(s4.pairs[0].map.steps[0].op, Step::Op::Invert);
  for (const auto& x : s4.pairs[0].points)
    EXPECT_TRUE(is_conformal(jacobian(s4.pairs[0].map, x, JacobianMode::Analytic), 1e-12).has_value());

  const Atlas torus = builtin_atlas("torus_identity", {4, 1, 10, 0});
  EXPECT_EQ(torus.chart_count, 4);
  EXPECT_EQ(torus.pairs.size(), 12u);
  for (const auto& p : torus.pairs)
    EXPECT_TRUE(p.map.steps.empty());

  EXPECT_EQ(builtin_atlas("affine", {}).chart_count, 3);
  EXPECT_EQ(builtin_atlas("affine", {5, 1, 10, 0}).quads.size(), 5u);
  EXPECT_EQ(code_of([] { builtin_atlas("klein_bottle", {}); }), Errc::UnknownAtlas);
}

TEST(Builtin, DeterministicInSeed)
{
  for (const char* name : kConformalFamilies) {
    const auto a = io::to_json(builtin_atlas(name, {0, 9, 10, 0})).dump();
    const auto b = io::to_json(builtin_atlas(name, {0, 9, 10, 0})).dump();
    EXPECT_EQ(a, b) << name;
    const auto c = io::to_json(builtin_atlas(name, {0, 10, 10, 0})).dump();
    EXPECT_NE(a, c) << name;
  }
}

TEST(Builtin, NervePointsAreInTargetChart)
{
  const Atlas a = builtin_atlas("synthetic_conformal", {3, 2, 5, 0});
  const Nerve n = a.nerve();
  for (const auto& p : a.pairs) {
    const auto& ov = n.overlap(p.ij);
    ASSERT_EQ(ov.points.size(), p.points.size());
    for (std::size_t s = 0; s < p.points.size(); ++s)
      EXPECT_TRUE(quat_near(ov.points[s], transition_eval(p.map, p.points[s]), 1e-15));
  }
}

TEST(Conformality, AllFamiliesBothModes)
{
  for (const char* name : kConformalFamilies) {
    const Atlas a = builtin_atlas(name, {0, 4, 25, 0});
    for (const auto& p : a.pairs) {
      for (const auto& x : p.points) {
        const Matrix4d ja = jacobian(p.map, x, JacobianMode::Analytic);
        const Matrix4d jf = jacobian(p.map, x, JacobianMode::FiniteDifference);
        EXPECT_LE(conformal_residual(ja), 1e-10) << name;
        EXPECT_LE(conformal_residual(jf), 1e-6) << name;
        EXPECT_GT(ja.determinant(), 0) << name;
        EXPECT_LE((ja - jf).norm(), 1e-6 * ja.norm()) << name;
      }
    }
  }
}

TEST(FactorizeTransitions, AffineIsConstant)
{
  const Atlas a = builtin_atlas("affine", {3, 5, 40, 0});
  const auto fields = factorize_transitions(a, JacobianMode::Analytic);
  for (const auto& [ij, field] : fields) {
    const Quatd x0 = field.samples.front().x, y0 = field.samples.front().y;
    for (const auto& s : field.samples) {
      EXPECT_TRUE(matrix_near(phi_matrix(s.x, s.y), s.jacobian, 1e-10 * s.jacobian.norm()));
      // Aligned signs make the factors literally constant.
      EXPECT_TRUE(quat_near(s.x, x0, 1e-9 * x0.norm()));
      EXPECT_TRUE(quat_near(s.y, y0, 1e-9 * y0.norm()));
      EXPECT_NEAR(s.x.norm(), std::sqrt(s.lambda), 1e-12 * s.lambda);
    }
  }
}

TEST(FactorizeTransitions, InversionAtOne)
{
  Atlas a;
  a.chart_count = 2;
  a.pairs.push_back({{0, 1}, TransitionMap{{Step::invert()}}, {0}, {Quatd::one()}});
  const auto fields = factorize_transitions(a, JacobianMode::Analytic);
  const JacobianSample& s = fields.at({0, 1}).samples.front();
  EXPECT_TRUE(matrix_near(s.jacobian, -Matrix4d::Identity(), 1e-15));
  EXPECT_LE(ConformalElementd(s.x, s.y).distance(ConformalElementd(Quatd::one(), -Quatd::one())), 1e-12);
}

TEST(FactorizeTransitions, ShearIsRejected)
{
  const Atlas a = builtin_atlas("affine", {3, 1, 10, 0.2});
  for (auto mode : {JacobianMode::Analytic, JacobianMode::FiniteDifference}) {
    try {
      factorize_transitions(a, mode);
      FAIL() << "expected NotConformal";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::NotConformal);
      EXPECT_NE(std::string(e.what()).find("(0,1)"), std::string::npos) << e.what();
    }
  }
}

TEST(Tangent, AffinePassesBothModes)
{
  const Atlas a = builtin_atlas("affine", {3, 1, 20, 0});
  const auto analytic = build_tangent_cocycle(a, JacobianMode::Analytic);
  const auto r = check_cocycle(analytic, 1e-8);
  EXPECT_TRUE(r.pass);
  EXPECT_FALSE(r.vacuous);
  EXPECT_LE(r.worst()->max_residual, 1e-13);
  EXPECT_TRUE(groupoid_oracle_check(analytic, 1e-8).pass);
  EXPECT_TRUE(check_cocycle(build_tangent_cocycle(a, JacobianMode::FiniteDifference), 1e-5).pass);
}

TEST(Tangent, ObjectFieldMatchesIndependentFactorization)
{
  const Atlas a = builtin_atlas("synthetic_conformal", {4, 2, 15, 0});
  const auto c = build_tangent_cocycle(a, JacobianMode::Analytic);
  for (const auto& p : a.pairs) {
    const auto& alpha = c.object(p.ij).values;
    for (std::size_t s = 0; s < p.points.size(); ++s) {
      const Matrix4d j = finite_difference_jacobian(p.map, p.points[s], 1e-5);
      const auto f = conformal_factorize(j, 1e-6);
      EXPECT_LE(alpha[s].versor_distance(delta(f.q() * f.p())), 1e-6);
    }
  }
  EXPECT_TRUE(check_cocycle(c, 1e-8).pass);
  EXPECT_TRUE(groupoid_oracle_check(c, 1e-8).pass);
}

TEST(Tangent, S4IsVacuousAndWellDefined)
{
  const Atlas a = builtin_atlas("s4_stereo", {0, 1, 200, 0});
  const auto c = build_tangent_cocycle(a, JacobianMode::FiniteDifference);
  const auto r = check_cocycle(c, 1e-5);
  EXPECT_TRUE(r.pass);
  EXPECT_TRUE(r.vacuous);
  for (const auto& [ij, f] : c.objects) {
    EXPECT_EQ(f.values.size(), 200u);
    for (const auto& rot : f.values) {
      EXPECT_TRUE(rot.versor().is_finite());
      EXPECT_NEAR(rot.versor().norm(), 1.0, 1e-12);
    }
  }
  for (const auto& field : factorize_transitions(a, JacobianMode::FiniteDifference)) {
    for (const auto& s : field.second.samples)
      EXPECT_LE(s.conformal_residual, 1e-6);
  }
}

TEST(Tangent, TorusIsTrivial)
{
  const auto c = build_tangent_cocycle(builtin_atlas("torus_identity", {}), JacobianMode::Analytic);
  for (const auto& [s, f] : c.objects) {
    for (const auto& r : f.values)
      EXPECT_TRUE(r.approx_equal(Rotation3d::identity(), 1e-15));
  }
  for (const auto& [s, f] : c.morphisms) {
    for (const auto& p : f.values)
      EXPECT_TRUE(quat_near(p, Quatd::one(), 1e-15));
  }
}

TEST(Tangent, GaugeInvariantUnderFactorSigns)
{
  // p_ijk only depends on the classes of the factor pairs: flipping all
  // signs of one pair's factors leaves the cocycle unchanged.
  const Atlas a = builtin_atlas("synthetic_conformal", {3, 4, 10, 0});
  const auto fields = factorize_transitions(a, JacobianMode::Analytic);
  const JacobianSample& ij = fields.at({0, 1}).samples[0];
  const JacobianSample& jk = fields.at({1, 2}).samples[0];
  auto twist = [](const Quatd& x_ij, const Quatd& y_ij, const Quatd& x_jk, const Quatd& y_jk) {
    return (y_jk * y_ij * x_ij * x_jk) * ((y_ij * x_ij) * (y_jk * x_jk)).inverse();
  };
  const Quatd base = twist(ij.x, ij.y, jk.x, jk.y);
  const Quatd flipped = twist(-ij.x * 3.0, -ij.y / 3.0, jk.x * 0.5, jk.y * 2.0);
  EXPECT_LE(scale_free_residual(base, flipped), 1e-14);
}

TEST(Tangent, NonConformalAtlasFails)
{
  for (const char* name : {"affine", "synthetic_conformal", "s4_stereo", "torus_identity"}) {
    const Atlas a = builtin_atlas(name, {0, 1, 20, 0.3});
    EXPECT_EQ(code_of([&] { build_tangent_cocycle(a, JacobianMode::Analytic); }), Errc::NotConformal) << name;
  }
}

TEST(Json, AtlasRoundtrip)
{
  const Atlas a = with_shear(builtin_atlas("synthetic_conformal", {3, 6, 8, 0}), {2, 0}, 1e-3);
  const Atlas back = io::atlas_from_json(io::json::parse(io::to_json(a).dump()));
  EXPECT_EQ(io::to_json(back).dump(), io::to_json(a).dump());
  const Atlas clean = builtin_atlas("affine", {3, 6, 8, 0});
  const auto c1 = io::to_json(build_tangent_cocycle(clean, JacobianMode::Analytic)).dump();
  const auto c2 = io::to_json(build_tangent_cocycle(io::atlas_from_json(io::to_json(clean)), JacobianMode::Analytic)).dump();
  EXPECT_EQ(c1, c2);

  auto bad = io::to_json(clean);
  bad["pairs"][0]["chain"][0]["op"] = "rotate";
  EXPECT_THROW(io::atlas_from_json(bad), Error);
}

} // namespace
} // namespace qgerbe
