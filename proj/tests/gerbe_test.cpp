#include "support.hpp"

#include "qgerbe/gerbe.hpp"
#include "qgerbe/io.hpp"

namespace qgerbe {
namespace {

using test::quat_near;

std::shared_ptr<const Nerve> synthetic_nerve()
{
  return std::make_shared<const Nerve>(complete_nerve(4, 20));
}

double worst(const CheckReport& r)
{
  const auto w = r.worst();
  return w ? w->max_residual : 0.0;
}

TEST(CheckCocycle, TrivialHasZeroResidual)
{
  const auto r = check_cocycle(trivial_cocycle(synthetic_nerve()), kCocycleTolerance);
  EXPECT_TRUE(r.pass);
  EXPECT_FALSE(r.vacuous);
  EXPECT_EQ(worst(r), 0.0);
  // 4 triples with an object entry each, 1 quad with a coherence entry.
  EXPECT_EQ(r.per_simplex.size(), 5u);
}

TEST(CheckCocycle, SyntheticPassesAndOracleAgrees)
{
  const auto nerve = synthetic_nerve();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto c = synth_coboundary_cocycle(nerve, seed).cocycle;
    const auto a = check_cocycle(c, kCocycleTolerance);
    const auto b = groupoid_oracle_check(c, kCocycleTolerance);
    EXPECT_TRUE(a.pass) << "seed " << seed << " residual " << worst(a);
    EXPECT_TRUE(b.pass) << "seed " << seed << " residual " << worst(b);
    ASSERT_EQ(a.per_simplex.size(), b.per_simplex.size());
    for (std::size_t e = 0; e < a.per_simplex.size(); ++e)
      EXPECT_NEAR(a.per_simplex[e].max_residual, b.per_simplex[e].max_residual, 1e-12);
  }
}

TEST(CheckCocycle, InjectedDefect)
{
  auto c = trivial_cocycle(synthetic_nerve());
  c.morphisms.at({0, 1, 2}).values[7] = Quatd::j();
  const auto r = check_cocycle(c, kCocycleTolerance);
  EXPECT_FALSE(r.pass);
  EXPECT_GE(worst(r), (Quatd::j() - Quatd::one()).norm());
  ASSERT_TRUE(r.worst().has_value());
  EXPECT_EQ(r.worst()->point_index, 7u);
  EXPECT_FALSE(groupoid_oracle_check(c, kCocycleTolerance).pass);
}

TEST(CheckCocycle, CoherenceOnlyDefect)
{
  // A real rescaling is invisible; a sign flip of one p_ijk passes the
  // object check but breaks the square.
  const auto nerve = synthetic_nerve();
  auto c = synth_coboundary_cocycle(nerve, 3).cocycle;
  for (auto& v : c.morphisms.at({0, 1, 3}).values)
    v = v * 4.0;
  EXPECT_TRUE(check_cocycle(c, kCocycleTolerance).pass);
  for (auto& v : c.morphisms.at({0, 1, 3}).values)
    v = -v;
  const auto r = check_cocycle(c, kCocycleTolerance);
  EXPECT_FALSE(r.pass);
  for (const auto& e : r.per_simplex) {
    if (e.kind == "object")
      EXPECT_LE(e.max_residual, 1e-10);
    else
      EXPECT_NEAR(e.max_residual, 2.0, 1e-9);
  }
  EXPECT_FALSE(groupoid_oracle_check(c, kCocycleTolerance).pass);
}

TEST(CheckCocycle, VacuousWithoutTriples)
{
  const auto nerve = std::make_shared<const Nerve>(build_nerve({2, {{{0, 1}, {0, 1, 2}, {}}, {{1, 0}, {0, 1, 2}, {}}}}));
  const auto r = check_cocycle(trivial_cocycle(nerve), kCocycleTolerance);
  EXPECT_TRUE(r.pass);
  EXPECT_TRUE(r.vacuous);
  EXPECT_FALSE(r.worst().has_value());
}

TEST(CheckCocycle, MissingField)
{
  auto c = trivial_cocycle(synthetic_nerve());
  c.morphisms.erase({0, 2, 3});
  try {
    check_cocycle(c, kCocycleTolerance);
    FAIL() << "expected MissingField";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingField);
  }
}

TEST(Coboundary, Identity)
{
  const auto nerve = synthetic_nerve();
  const auto a = synth_coboundary_cocycle(nerve, 5).cocycle;
  EXPECT_TRUE(check_coboundary(a, a, identity_coboundary(*nerve), kCocycleTolerance).pass);
  const auto same = apply_coboundary(a, identity_coboundary(*nerve));
  for (const auto& [s, f] : a.morphisms) {
    for (std::size_t k = 0; k < f.values.size(); ++k)
      EXPECT_TRUE(quat_near(same.morphism(s).values[k], f.values[k], 1e-14 * f.values[k].norm()));
  }
}

TEST(Coboundary, ConstantConjugation)
{
  // m_i = delta(u), n_ij = 1: alpha' = u^-1 alpha u and p' = u^-1 p u.
  const auto nerve = synthetic_nerve();
  const auto a = synth_coboundary_cocycle(nerve, 6).cocycle;
  const Quatd u = Quatd(0.2, -1, 0.5, 2).normalized();
  auto cob = identity_coboundary(*nerve);
  for (auto& [i, f] : cob.charts)
    std::fill(f.values.begin(), f.values.end(), Rotation3d(u));
  const auto b = apply_coboundary(a, cob);
  for (const auto& [s, f] : a.morphisms) {
    for (std::size_t k = 0; k < f.values.size(); ++k) {
      const Quatd want = qmul(qmul(u.conj(), f.values[k]), u);
      EXPECT_TRUE(quat_near(b.morphism(s).values[k], want, 1e-12 * want.norm()));
    }
  }
  for (const auto& [s, f] : a.objects) {
    for (std::size_t k = 0; k < f.values.size(); ++k)
      EXPECT_TRUE(b.object(s).values[k].approx_equal(Rotation3d(u.conj() * f.values[k].versor() * u), 1e-12));
  }
  EXPECT_TRUE(check_cocycle(b, kCocycleTolerance).pass);
  EXPECT_TRUE(check_coboundary(a, b, cob, kCocycleTolerance).pass);
}

TEST(Coboundary, ApplyThenCheck)
{
  const auto nerve = synthetic_nerve();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto a = synth_coboundary_cocycle(nerve, seed).cocycle;
    const auto cob = random_coboundary(*nerve, 1000 + seed);
    const auto b = apply_coboundary(a, cob);
    EXPECT_TRUE(check_cocycle(b, kCocycleTolerance).pass);
    EXPECT_TRUE(check_coboundary(a, b, cob, kCocycleTolerance).pass) << worst(check_coboundary(a, b, cob, 1));
  }
}

TEST(Coboundary, PerturbedFails)
{
  const auto nerve = synthetic_nerve();
  const auto a = synth_coboundary_cocycle(nerve, 8).cocycle;
  const auto cob = random_coboundary(*nerve, 9);
  const auto b = apply_coboundary(a, cob);
  auto bad = cob;
  bad.pairs.at({1, 3}).values[4] = bad.pairs.at({1, 3}).values[4] * Quatd(1, 0, 0.2, 0);
  const auto r = check_coboundary(a, b, bad, kCocycleTolerance);
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.worst()->point_index, 4u);
}

TEST(Coboundary, EquivalenceRelation)
{
  const auto nerve = synthetic_nerve();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto a = synth_coboundary_cocycle(nerve, seed).cocycle;
    const auto first = random_coboundary(*nerve, 50 + seed);
    const auto second = random_coboundary(*nerve, 80 + seed);
    const auto b = apply_coboundary(a, first);
    const auto c = apply_coboundary(b, second);
    EXPECT_TRUE(check_coboundary(b, a, inverse_coboundary(*nerve, first), kCocycleTolerance).pass);
    EXPECT_TRUE(check_coboundary(a, c, compose_coboundaries(*nerve, first, second), kCocycleTolerance).pass);
  }
}

TEST(Coboundary, SynthGeneratorRetainsItsData)
{
  const auto nerve = synthetic_nerve();
  const auto x = synth_coboundary_cocycle(nerve, 21);
  const auto y = synth_coboundary_cocycle(nerve, 22);
  const auto trivial = trivial_cocycle(nerve);
  EXPECT_TRUE(check_coboundary(trivial, x.cocycle, x.from_trivial, kCocycleTolerance).pass);
  // x -> trivial -> y
  const auto x_to_y = compose_coboundaries(*nerve, inverse_coboundary(*nerve, x.from_trivial), y.from_trivial);
  EXPECT_TRUE(check_coboundary(x.cocycle, y.cocycle, x_to_y, kCocycleTolerance).pass);
}

TEST(Coboundary, NerveMismatch)
{
  const auto a = trivial_cocycle(synthetic_nerve());
  const auto b = trivial_cocycle(std::make_shared<const Nerve>(complete_nerve(4, 10)));
  try {
    check_coboundary(a, b, identity_coboundary(*a.nerve), kCocycleTolerance);
    FAIL() << "expected NerveMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NerveMismatch);
  }
}

TEST(DeltaBlindness, NegationOnlyVisibleAtMorphismLevel)
{
  const auto nerve = synthetic_nerve();
  const auto c = synth_coboundary_cocycle(nerve, 30).cocycle;
  auto flipped = c;
  for (auto& v : flipped.morphisms.at({1, 2, 3}).values)
    v = -v;
  const auto before = check_cocycle(c, kCocycleTolerance);
  const auto after = check_cocycle(flipped, kCocycleTolerance);
  for (std::size_t e = 0; e < after.per_simplex.size(); ++e) {
    if (after.per_simplex[e].kind == "object")
      EXPECT_NEAR(after.per_simplex[e].max_residual, before.per_simplex[e].max_residual, 1e-12);
    else
      EXPECT_GT(after.per_simplex[e].max_residual, 1.0);
  }
}

TEST(Synth, Deterministic)
{
  const auto nerve = synthetic_nerve();
  const std::string a = io::to_json(synth_coboundary_cocycle(nerve, 77).cocycle).dump();
  const std::string b = io::to_json(synth_coboundary_cocycle(nerve, 77).cocycle).dump();
  const std::string c = io::to_json(synth_coboundary_cocycle(nerve, 78).cocycle).dump();
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Json, CocycleAndCoboundaryRoundtrip)
{
  const auto nerve = synthetic_nerve();
  const auto x = synth_coboundary_cocycle(nerve, 4);
  const auto c = io::cocycle_from_json(io::json::parse(io::to_json(x.cocycle).dump()));
  EXPECT_TRUE(*c.nerve == *nerve);
  EXPECT_TRUE(check_cocycle(c, kCocycleTolerance).pass);
  const auto cob = io::coboundary_from_json(io::json::parse(io::to_json(x.from_trivial).dump()), *nerve);
  EXPECT_TRUE(check_coboundary(trivial_cocycle(nerve), c, cob, kCocycleTolerance).pass);

  auto j = io::to_json(x.cocycle);
  j["fields"][0]["kind"] = "X";
  EXPECT_THROW(io::cocycle_from_json(j), Error);
  auto short_field = io::to_json(x.from_trivial);
  short_field["fields"][0]["values"].erase(0);
  try {
    io::coboundary_from_json(short_field, *nerve);
    FAIL() << "expected MissingField";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingField);
  }
}

} // namespace
} // namespace qgerbe
