#include "qgerbe/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qgerbe/atlas.hpp"
#include "qgerbe/gerbe.hpp"
#include "qgerbe/hgroupoid.hpp"
#include "qgerbe/random.hpp"

namespace qgerbe {

namespace {

class Tally {
public:
  explicit Tally(std::string name) { result_.name = std::move(name); }

  /// Records one case that passes when residual <= tol.
  void expect_below(double residual, double tol, const std::string& what)
  {
    expect(residual <= tol, residual, what);
  }

  void expect(bool ok, double residual, const std::string& what)
  {
    ++result_.cases;
    if (std::isfinite(residual))
      result_.worst = std::max(result_.worst, residual);
    if (ok) {
      ++result_.passed;
    } else if (result_.first_failure.empty()) {
      std::ostringstream os;
      os << what << " (residual " << residual << ")";
      result_.first_failure = os.str();
    }
  }

  void fail(const std::string& what) { expect(false, 0, what); }

  SuiteResult done() { return std::move(result_); }

private:
  SuiteResult result_;
};

double relative(const Quatd& a, const Quatd& b)
{
  return (a - b).norm() / std::max(1.0, b.norm());
}

GroupoidMorphismd random_morphism(Rng& rng)
{
  return {random_nonzero_quat(rng), Rotation3d(random_versor(rng))};
}

GroupoidMorphismd random_from(Rng& rng, const Rotation3d& source)
{
  return {random_nonzero_quat(rng), source};
}

double morphism_distance(const GroupoidMorphismd& a, const GroupoidMorphismd& b)
{
  return std::max(relative(a.p, b.p), a.source.versor_distance(b.source));
}

SuiteResult norm_suite(Rng& rng)
{
  Tally t("norm");
  for (int n = 0; n < 1000; ++n) {
    const Quatd p = random_quat(rng), q = random_quat(rng), x = random_quat(rng);
    const double expected = p.norm() * q.norm() * x.norm();
    const double got = apply(phi_matrix(p, q), x).norm();
    t.expect_below(std::abs(got - expected) / expected, 1e-12, "|phi(p,q) x| != |p||q||x|");
  }
  return t.done();
}

SuiteResult exactness_suite(Rng& rng)
{
  Tally t("exactness");
  std::uniform_real_distribution<double> mag(0.1, 10.0);
  std::bernoulli_distribution coin(0.5);
  const Matrix4d id = Matrix4d::Identity();
  for (int n = 0; n < 200; ++n) {
    const double r = coin(rng) ? mag(rng) : -mag(rng);
    const double res = (phi_matrix(Quatd::real(r), Quatd::real(1.0 / r)) - id).norm();
    t.expect_below(res, 1e-12, "phi(r, 1/r) != Id");
  }
  for (int n = 0; n < 200; ++n) {
    // Non-real p with q = p^-1 gives a nontrivial rotation; random q is generic.
    const Quatd p = random_nonzero_quat(rng);
    const Quatd q = n % 2 == 0 ? p.inverse() : random_nonzero_quat(rng);
    const double res = (phi_matrix(p, q) - id).norm();
    t.expect(res > 1e-12, res, "phi(p, q) = Id for a pair that is not (r, 1/r)");
  }
  return t.done();
}

SuiteResult schur_suite(Rng&)
{
  Tally t("schur");
  const auto sv = commutant_singular_values(standard_bimodule<double>());
  const double cutoff = kRankTolerance * std::max(1.0, sv(0));
  int nullity = 0;
  for (int a = 0; a < 16; ++a)
    nullity += sv(a) <= cutoff ? 1 : 0;
  t.expect(nullity == 1, nullity, "commutant nullity differs from 1");
  const double gap = sv(14) / std::max(sv(15), std::numeric_limits<double>::min());
  t.expect(gap >= 1e6, gap, "singular-value gap below 1e6");
  return t.done();
}

SuiteResult factorization_suite(Rng& rng)
{
  Tally t("factorization");
  for (int n = 0; n < 500; ++n) {
    const ConformalElementd truth(random_nonzero_quat(rng), random_nonzero_quat(rng));
    const Matrix4d m = truth.matrix();
    try {
      const auto c = conformal_factorize(m, 1e-9);
      t.expect_below((c.matrix() - m).norm() / m.norm(), 1e-9, "roundtrip reconstruction");
      t.expect_below(c.distance(truth) / std::sqrt(truth.lambda()), 1e-9, "roundtrip class");
    } catch (const Error& e) {
      t.fail(e.what());
    }
  }
  for (int n = 0; n < 100; ++n) {
    Matrix4d m;
    for (int a = 0; a < 16; ++a)
      m(a) = random_quat(rng).w;
    t.expect(!is_conformal(m, 1e-9).has_value(), conformal_residual(m), "random matrix accepted");
  }
  return t.done();
}

SuiteResult delta_hom_suite(Rng& rng)
{
  Tally t("delta_hom");
  for (int n = 0; n < 500; ++n) {
    const Quatd p = random_nonzero_quat(rng), q = random_nonzero_quat(rng);
    t.expect_below(rotation_residual(delta(p * q), delta(p) * delta(q)), 1e-12, "delta(pq) != delta(p) delta(q)");
    const Quatd v = random_quat(rng);
    t.expect_below(relative(delta(p)(v), p * v * p.inverse()), 1e-12, "delta(p) v != p v p^-1");
  }
  return t.done();
}

SuiteResult groupoid_suite(Rng& rng)
{
  Tally t("groupoid");
  for (int n = 0; n < 300; ++n) {
    const auto a = random_morphism(rng);
    const auto b = random_from(rng, a.target());
    const auto c = random_from(rng, b.target());
    t.expect_below(morphism_distance(compose(c, compose(b, a)), compose(compose(c, b), a)), 1e-12,
                   "compose is not associative");
    t.expect_below(morphism_distance(compose(GroupoidMorphismd::identity(a.target()), a), a), 1e-12,
                   "left identity");
    t.expect_below(morphism_distance(compose(a, GroupoidMorphismd::identity(a.source)), a), 1e-12,
                   "right identity");
    t.expect_below(morphism_distance(compose(a.inverse(), a), GroupoidMorphismd::identity(a.source)), 1e-12,
                   "left inverse");
    t.expect_below(morphism_distance(compose(a, a.inverse()), GroupoidMorphismd::identity(a.target())), 1e-12,
                   "right inverse");
    bool rejected = false;
    try {
      compose(random_morphism(rng), a);
    } catch (const Error& e) {
      rejected = e.code() == Errc::NonComposable;
    }
    t.expect(rejected, 0, "mismatched compose accepted");
  }
  return t.done();
}

SuiteResult monoidal_suite(Rng& rng)
{
  Tally t("monoidal");
  const GroupoidMorphismd unit;
  for (int n = 0; n < 300; ++n) {
    const auto a = random_morphism(rng), b = random_morphism(rng), c = random_morphism(rng);
    t.expect_below(morphism_distance(tensor(a, tensor(b, c)), tensor(tensor(a, b), c)), 1e-12,
                   "tensor is not associative");
    t.expect_below(morphism_distance(tensor(unit, a), a), 1e-12, "left unit");
    t.expect_below(morphism_distance(tensor(a, unit), a), 1e-12, "right unit");
    t.expect_below(tensor(a, b).target().versor_distance(a.target() * b.target()), 1e-12,
                   "target of tensor != tensor of targets");
  }
  return t.done();
}

SuiteResult to_conformal_suite(Rng& rng)
{
  Tally t("to_conformal");
  for (int n = 0; n < 300; ++n) {
    const auto a = random_morphism(rng), b = random_morphism(rng);
    const Matrix4d lhs = to_conformal(tensor(a, b)).matrix();
    const Matrix4d rhs = to_conformal(a).matrix() * to_conformal(b).matrix();
    t.expect_below((lhs - rhs).norm() / rhs.norm(), 1e-10, "to_conformal is not monoidal");
    t.expect_below(morphism_distance(from_conformal(to_conformal(a)), a), 1e-10, "to_conformal not injective");
  }
  return t.done();
}

SuiteResult noncommutative_suite(Rng&)
{
  Tally t("noncommutative");
  const GroupoidMorphismd a(Quatd::i(), Rotation3d::identity());
  const GroupoidMorphismd b(Quatd::j(), delta(Quatd::i()));
  const double gap = morphism_distance(tensor(a, b), tensor(b, a));
  t.expect(gap > 1e-6, gap, "tensor((i,id),(j,delta(i))) commutes");
  return t.done();
}

SuiteResult frame_suite(Rng& rng)
{
  Tally t("frame");
  for (int n = 0; n < 300; ++n) {
    const Quatd u = random_versor(rng);
    try {
      const auto b = twist_bimodule(delta(u));
      const Vector4d e = identity_frame(b).e;
      const double along = e.dot(u.coeffs());
      const double angle = std::atan2((e - along * u.coeffs()).norm(), std::abs(along));
      t.expect_below(angle, 1e-8, "frame off the line of u");
      t.expect_below(automorphism_at(b, e).versor_distance(Rotation3d::identity()), 1e-9,
                     "p -> p^e is not the identity");
    } catch (const Error& e) {
      t.fail(e.what());
    }
  }
  return t.done();
}

SuiteResult bimodule_tensor_suite(Rng& rng)
{
  Tally t("bimodule_tensor");
  for (int n = 0; n < 200; ++n) {
    const Rotation3d alpha(random_versor(rng)), beta(random_versor(rng));
    try {
      const auto ab = bimodule_tensor(twist_bimodule(alpha), twist_bimodule(beta));
      t.expect_below(classifier(ab).versor_distance(alpha * beta), 1e-9, "classifier != alpha beta");
      const auto inv = bimodule_tensor(twist_bimodule(alpha), twist_bimodule(alpha.inverse()));
      t.expect_below(classifier(inv).versor_distance(Rotation3d::identity()), 1e-9,
                     "alpha (x) alpha^-1 is not standard");
    } catch (const Error& e) {
      t.fail(e.what());
    }
  }
  return t.done();
}

SuiteResult restriction_suite(Rng& rng)
{
  Tally t("restriction");
  const Nerve nerve = complete_nerve(4, 20);
  for (const auto& pair : nerve.pairs()) {
    FieldQ f{pair.index, {}};
    for (std::size_t s = 0; s < pair.ids.size(); ++s)
      f.values.push_back(random_nonzero_quat(rng));
    for (const auto& triple : nerve.triples()) {
      if (!is_face(pair.index, triple.index))
        continue;
      const auto via = restrict(nerve, restrict(nerve, f, triple.index), nerve.quads().front().index);
      const auto direct = restrict(nerve, f, nerve.quads().front().index);
      double res = 0;
      for (std::size_t s = 0; s < direct.values.size(); ++s)
        res = std::max(res, (via.values[s] - direct.values[s]).norm());
      t.expect(via.values.size() == direct.values.size() && res == 0, res, "restriction not functorial");
    }
  }
  return t.done();
}

constexpr int kSynthSeeds = 20;

BitorsorCocycle with_defect(BitorsorCocycle c, Rng& rng)
{
  auto it = c.morphisms.begin();
  std::advance(it, std::uniform_int_distribution<std::size_t>(0, c.morphisms.size() - 1)(rng));
  auto& values = it->second.values;
  const std::size_t s = std::uniform_int_distribution<std::size_t>(0, values.size() - 1)(rng);
  values[s] = values[s] * Quatd::j();
  return c;
}

SuiteResult cocycle_suite(Rng& rng)
{
  Tally t("cocycle");
  const auto nerve = std::make_shared<const Nerve>(complete_nerve(4, 20));
  for (int n = 0; n < kSynthSeeds; ++n) {
    const auto synth = synth_coboundary_cocycle(nerve, rng());
    const auto good = check_cocycle(synth.cocycle, kCocycleTolerance);
    t.expect(good.pass, good.worst() ? good.worst()->max_residual : 0, "synthetic cocycle rejected");
    const auto bad = check_cocycle(with_defect(synth.cocycle, rng), kCocycleTolerance);
    t.expect(!bad.pass, 0, "defect-injected cocycle accepted");
  }
  const auto trivial = check_cocycle(trivial_cocycle(nerve), kCocycleTolerance);
  t.expect(trivial.pass && trivial.worst()->max_residual == 0, trivial.worst()->max_residual,
           "trivial cocycle has nonzero residual");
  return t.done();
}

SuiteResult oracle_equivalence_suite(Rng& rng)
{
  Tally t("oracle_equivalence");
  const auto nerve = std::make_shared<const Nerve>(complete_nerve(4, 20));
  auto agree = [&](const BitorsorCocycle& c, const char* what) {
    const auto a = check_cocycle(c, kCocycleTolerance);
    const auto b = groupoid_oracle_check(c, kCocycleTolerance);
    t.expect(a.pass == b.pass, 0, std::string("verdicts differ on ") + what);
    if (a.pass && b.pass) {
      double gap = 0;
      for (std::size_t e = 0; e < a.per_simplex.size(); ++e)
        gap = std::max(gap, std::abs(a.per_simplex[e].max_residual - b.per_simplex[e].max_residual));
      t.expect_below(gap, 1e-12, std::string("residuals differ on ") + what);
    }
  };
  agree(trivial_cocycle(nerve), "the trivial cocycle");
  for (int n = 0; n < kSynthSeeds; ++n) {
    const auto synth = synth_coboundary_cocycle(nerve, rng());
    agree(synth.cocycle, "a synthetic cocycle");
    agree(with_defect(synth.cocycle, rng), "a defect-injected cocycle");
  }
  return t.done();
}

SuiteResult coboundary_equivalence_suite(Rng& rng)
{
  Tally t("coboundary_equivalence");
  const auto nerve = std::make_shared<const Nerve>(complete_nerve(4, 20));
  auto verify = [&](const BitorsorCocycle& a, const BitorsorCocycle& b, const CoboundaryData& cob,
                    const char* what) {
    const auto r = check_coboundary(a, b, cob, kCocycleTolerance);
    t.expect(r.pass, r.worst() ? r.worst()->max_residual : 0, what);
  };
  for (int n = 0; n < kSynthSeeds; ++n) {
    const auto a = synth_coboundary_cocycle(nerve, rng()).cocycle;
    const auto first = random_coboundary(*nerve, rng());
    const auto second = random_coboundary(*nerve, rng());
    const auto b = apply_coboundary(a, first);
    const auto c = apply_coboundary(b, second);
    verify(a, a, identity_coboundary(*nerve), "identity coboundary");
    verify(a, b, first, "applied coboundary");
    verify(b, a, inverse_coboundary(*nerve, first), "inverse coboundary");
    verify(a, c, compose_coboundaries(*nerve, first, second), "composite coboundary");
    const auto cc = check_cocycle(c, kCocycleTolerance);
    t.expect(cc.pass, cc.worst()->max_residual, "coboundary image is not a cocycle");
    auto perturbed = first;
    perturbed.pairs.begin()->second.values.front() =
        perturbed.pairs.begin()->second.values.front() * Quatd(1.0, 0.1, 0.0, 0.0);
    t.expect(!check_coboundary(a, b, perturbed, kCocycleTolerance).pass, 0, "perturbed coboundary accepted");
  }
  return t.done();
}

SuiteResult delta_blindness_suite(Rng& rng)
{
  Tally t("delta_blindness");
  const auto nerve = std::make_shared<const Nerve>(complete_nerve(4, 20));
  for (int n = 0; n < kSynthSeeds; ++n) {
    const auto c = synth_coboundary_cocycle(nerve, rng()).cocycle;
    for (const auto& [simplex, field] : c.morphisms) {
      auto flipped = c;
      for (auto& v : flipped.morphisms.at(simplex).values)
        v = -v;
      const auto before = check_cocycle(c, kCocycleTolerance);
      const auto after = check_cocycle(flipped, kCocycleTolerance);
      double object_gap = 0, coherence = 0;
      for (std::size_t e = 0; e < after.per_simplex.size(); ++e) {
        const auto& entry = after.per_simplex[e];
        if (entry.kind == "object")
          object_gap = std::max(object_gap, std::abs(entry.max_residual - before.per_simplex[e].max_residual));
        else
          coherence = std::max(coherence, entry.max_residual);
      }
      t.expect_below(object_gap, 1e-12, "negation changed an object residual");
      t.expect(coherence > 1.0, coherence, "negation not detected by coherence");
    }
  }
  return t.done();
}

std::vector<std::pair<std::string, Atlas>> conformal_atlases(std::uint64_t seed)
{
  std::vector<std::pair<std::string, Atlas>> out;
  for (const char* name : {"s4_stereo", "affine", "torus_identity", "synthetic_conformal"})
    out.emplace_back(name, builtin_atlas(name, AtlasParams{0, seed, 20, 0}));
  return out;
}

SuiteResult conformality_suite(Rng& rng)
{
  Tally t("conformality");
  for (const auto& [name, atlas] : conformal_atlases(rng())) {
    for (const auto mode : {JacobianMode::Analytic, JacobianMode::FiniteDifference}) {
      for (const auto& pair : atlas.pairs) {
        for (const auto& x : pair.points) {
          const Matrix4d j = jacobian(pair.map, x, mode);
          const double res = conformal_residual(j);
          const bool ok = is_conformal(j, factorization_tolerance(mode)).has_value();
          t.expect(ok, res, name + " Jacobian is not conformal (" + std::string(to_string(mode)) + ")");
        }
      }
    }
  }
  return t.done();
}

SuiteResult fd_agreement_suite(Rng& rng)
{
  Tally t("fd_agreement");
  for (const auto& [name, atlas] : conformal_atlases(rng())) {
    for (const auto& pair : atlas.pairs) {
      for (const auto& x : pair.points) {
        const Matrix4d a = jacobian(pair.map, x, JacobianMode::Analytic);
        const Matrix4d f = jacobian(pair.map, x, JacobianMode::FiniteDifference);
        t.expect_below((a - f).norm() / a.norm(), 1e-6, name + ": analytic and finite-difference Jacobians differ");
      }
    }
  }
  return t.done();
}

TransitionMap random_chain(Rng& rng, int length)
{
  TransitionMap t;
  std::uniform_int_distribution<int> op(0, 3);
  for (int n = 0; n < length; ++n) {
    switch (op(rng)) {
    case 0: t.steps.push_back(Step::left_mul(random_nonzero_quat(rng))); break;
    case 1: t.steps.push_back(Step::right_mul(random_nonzero_quat(rng))); break;
    case 2: t.steps.push_back(Step::translate(random_quat(rng))); break;
    default: t.steps.push_back(Step::invert()); break;
    }
  }
  return t;
}

SuiteResult chain_rule_suite(Rng& rng)
{
  Tally t("chain_rule");
  for (int n = 0; n < 300; ++n) {
    const TransitionMap first = random_chain(rng, 3), second = random_chain(rng, 3);
    const Quatd x = random_quat(rng);
    try {
      const Quatd y = transition_eval(first, x);
      const Matrix4d whole = jacobian(first.then(second), x, JacobianMode::Analytic);
      const Matrix4d parts = jacobian(second, y, JacobianMode::Analytic) * jacobian(first, x, JacobianMode::Analytic);
      t.expect_below((whole - parts).norm() / parts.norm(), 1e-10, "J(g o f) != J(g) J(f)");
    } catch (const Error& e) {
      if (e.code() != Errc::PoleHit)
        t.fail(e.what());
    }
  }
  return t.done();
}

SuiteResult tangent_iff_suite(Rng& rng)
{
  Tally t("tangent_iff");
  const std::uint64_t seed = rng();
  for (const auto& [name, atlas] : conformal_atlases(seed)) {
    try {
      const auto r = check_cocycle(build_tangent_cocycle(atlas, JacobianMode::Analytic), 1e-8);
      t.expect(r.pass, r.worst() ? r.worst()->max_residual : 0, name + " tangent cocycle rejected");
    } catch (const Error& e) {
      t.fail(name + ": " + e.what());
    }
  }
  for (const char* name : {"affine", "synthetic_conformal", "s4_stereo"}) {
    const Atlas sheared = builtin_atlas(name, AtlasParams{0, seed, 20, 0.25});
    bool rejected = false;
    try {
      rejected = !check_cocycle(build_tangent_cocycle(sheared, JacobianMode::Analytic), 1e-8).pass;
    } catch (const Error& e) {
      rejected = e.code() == Errc::NotConformal;
    }
    t.expect(rejected, 0, std::string(name) + " with a shear was accepted");
  }
  return t.done();
}

SuiteResult injected_failure_suite(Rng&)
{
  Tally t("injected_failure");
  t.fail("failure injected on request");
  return t.done();
}

using SuiteFn = SuiteResult (*)(Rng&);

const std::vector<std::pair<std::string, SuiteFn>>& registry()
{
  static const std::vector<std::pair<std::string, SuiteFn>> suites = {
      {"norm", norm_suite},
      {"exactness", exactness_suite},
      {"schur", schur_suite},
      {"factorization", factorization_suite},
      {"delta_hom", delta_hom_suite},
      {"groupoid", groupoid_suite},
      {"monoidal", monoidal_suite},
      {"to_conformal", to_conformal_suite},
      {"noncommutative", noncommutative_suite},
      {"frame", frame_suite},
      {"bimodule_tensor", bimodule_tensor_suite},
      {"restriction", restriction_suite},
      {"cocycle", cocycle_suite},
      {"oracle_equivalence", oracle_equivalence_suite},
      {"coboundary_equivalence", coboundary_equivalence_suite},
      {"delta_blindness", delta_blindness_suite},
      {"conformality", conformality_suite},
      {"fd_agreement", fd_agreement_suite},
      {"chain_rule", chain_rule_suite},
      {"tangent_iff", tangent_iff_suite},
  };
  return suites;
}

} // namespace

bool SelftestReport::pass() const
{
  return !suites.empty() &&
         std::all_of(suites.begin(), suites.end(), [](const SuiteResult& s) { return s.pass(); });
}

std::vector<std::string> selftest_suite_names()
{
  std::vector<std::string> names;
  for (const auto& [name, fn] : registry())
    names.push_back(name);
  return names;
}

SelftestReport run_selftest(const SelftestOptions& options)
{
  std::vector<std::pair<std::string, SuiteFn>> chosen;
  for (const auto& entry : registry()) {
    if (entry.first.find(options.filter) != std::string::npos)
      chosen.push_back(entry);
  }
  if (options.inject_failure)
    chosen.emplace_back("injected_failure", injected_failure_suite);

  SelftestReport report;
  report.suites.resize(chosen.size());
  // One stream per suite, keyed by name.
  for (std::size_t s = 0; s < chosen.size(); ++s) {
    std::uint64_t key = 1469598103934665603ull;
    for (unsigned char ch : chosen[s].first)
      key = (key ^ ch) * 1099511628211ull;
    std::seed_seq seq{options.seed, key};
    Rng rng(seq);
    try {
      report.suites[s] = chosen[s].second(rng);
    } catch (const std::exception& e) {
      Tally t(chosen[s].first);
      t.fail(std::string("unexpected exception: ") + e.what());
      report.suites[s] = t.done();
    }
  }
  return report;
}

nlohmann::json to_json(const SelftestReport& report)
{
  nlohmann::json suites = nlohmann::json::array();
  for (const auto& s : report.suites) {
    nlohmann::json entry{{"name", s.name}, {"pass", s.pass()}, {"cases", s.cases},
                         {"passed", s.passed}, {"worst", s.worst}};
    if (!s.first_failure.empty())
      entry["first_failure"] = s.first_failure;
    suites.push_back(std::move(entry));
  }
  return {{"pass", report.pass()}, {"suites", std::move(suites)}};
}

} // namespace qgerbe
