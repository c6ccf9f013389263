#include "qgerbe/gerbe.hpp"

#include <algorithm>
#include <cmath>

#include "qgerbe/parallel.hpp"
#include "qgerbe/random.hpp"

namespace qgerbe {

namespace {

std::string label(const Simplex& s)
{
  std::string out = "(";
  for (std::size_t a = 0; a < s.size(); ++a)
    out += (a ? "," : "") + std::to_string(s[a]);
  return out + ")";
}

template <typename Value>
std::vector<Value> on(const Nerve& nerve, const Field<Value>& field, const Simplex& to)
{
  return restrict(nerve, field, to).values;
}

void record(ResidualEntry& e, std::size_t point, double residual, double log_scale = 0)
{
  if (residual > e.max_residual || std::isnan(residual)) {
    e.max_residual = residual;
    e.point_index = point;
  }
  e.max_log_scale = std::max(e.max_log_scale, log_scale);
}

double log_scale_gap(const Quatd& a, const Quatd& b)
{
  return std::abs(std::log(a.norm()) - std::log(b.norm()));
}

CheckReport finish(std::vector<ResidualEntry> entries, double tol, bool vacuous)
{
  CheckReport report;
  report.tol = tol;
  report.vacuous = vacuous;
  report.per_simplex = std::move(entries);
  for (const auto& e : report.per_simplex) {
    if (!(e.max_residual <= tol))
      report.pass = false;
  }
  return report;
}

void require_fields(const BitorsorCocycle& c)
{
  if (!c.nerve)
    throw Error(Errc::MissingField, "cocycle has no nerve");
  for (const auto& ov : c.nerve->pairs())
    validate_field(*c.nerve, c.object(ov.index));
  for (const auto& ov : c.nerve->triples())
    validate_field(*c.nerve, c.morphism(ov.index));
}

void require_fields(const Nerve& nerve, const CoboundaryData& cob)
{
  for (const auto& ov : nerve.charts()) {
    if (!ov.ids.empty())
      validate_field(nerve, cob.chart(ov.index[0]));
  }
  for (const auto& ov : nerve.pairs())
    validate_field(nerve, cob.pair(ov.index));
}

/// Pointwise rotation identity on every triple and quaternion identity on
/// every quadruple; `triple_body` and `quad_body` fill one entry each.
template <typename TripleBody, typename QuadBody>
CheckReport run_cocycle_check(const BitorsorCocycle& c, double tol, TripleBody&& triple_body,
                              QuadBody&& quad_body)
{
  require_fields(c);
  const Nerve& nerve = *c.nerve;
  const auto& triples = nerve.triples();
  const auto& quads = nerve.quads();

  std::vector<ResidualEntry> entries(triples.size() + quads.size());
  parallel_for(entries.size(), [&](std::size_t t) {
    if (t < triples.size()) {
      entries[t] = {triples[t].index, "object"};
      triple_body(triples[t].index, entries[t]);
    } else {
      const auto& q = quads[t - triples.size()];
      entries[t] = {q.index, "coherence"};
      quad_body(q.index, entries[t]);
    }
  });
  return finish(std::move(entries), tol, triples.empty());
}

GroupoidMorphismd compose_or_rebase(const GroupoidMorphismd& second, const GroupoidMorphismd& first)
{
  try {
    return compose(second, first);
  } catch (const Error& e) {
    if (e.code() != Errc::NonComposable)
      throw;
    return compose(GroupoidMorphismd(second.p, first.target()), first);
  }
}

} // namespace

const FieldR& BitorsorCocycle::object(const Simplex& pair) const
{
  const auto it = objects.find(pair);
  if (it == objects.end())
    throw Error(Errc::MissingField, "no object field on pair " + label(pair));
  return it->second;
}

const FieldQ& BitorsorCocycle::morphism(const Simplex& triple) const
{
  const auto it = morphisms.find(triple);
  if (it == morphisms.end())
    throw Error(Errc::MissingField, "no morphism field on triple " + label(triple));
  return it->second;
}

const FieldR& CoboundaryData::chart(int i) const
{
  const auto it = charts.find(i);
  if (it == charts.end())
    throw Error(Errc::MissingField, "no coboundary field on chart " + std::to_string(i));
  return it->second;
}

const FieldQ& CoboundaryData::pair(const Simplex& ij) const
{
  const auto it = pairs.find(ij);
  if (it == pairs.end())
    throw Error(Errc::MissingField, "no coboundary field on pair " + label(ij));
  return it->second;
}

std::optional<ResidualEntry> CheckReport::worst() const
{
  if (per_simplex.empty())
    return std::nullopt;
  return *std::max_element(per_simplex.begin(), per_simplex.end(),
                           [](const ResidualEntry& a, const ResidualEntry& b) {
                             return a.max_residual < b.max_residual;
                           });
}

double scale_free_residual(const Quatd& a, const Quatd& b)
{
  return (a.normalized() - b.normalized()).norm();
}

CheckReport check_cocycle(const BitorsorCocycle& c, double tol)
{
  const Nerve& nerve = *c.nerve;
  return run_cocycle_check(
      c, tol,
      [&](const Simplex& t, ResidualEntry& e) {
        const int i = t[0], j = t[1], k = t[2];
        const auto a_ij = on(nerve, c.object({i, j}), t);
        const auto a_jk = on(nerve, c.object({j, k}), t);
        const auto a_ik = on(nerve, c.object({i, k}), t);
        const auto& p = c.morphism(t).values;
        for (std::size_t s = 0; s < p.size(); ++s)
          record(e, s, rotation_residual(delta(p[s]) * a_ij[s] * a_jk[s], a_ik[s]));
      },
      [&](const Simplex& q, ResidualEntry& e) {
        const int i = q[0], j = q[1], k = q[2], l = q[3];
        const auto a_ij = on(nerve, c.object({i, j}), q);
        const auto p_ijk = on(nerve, c.morphism({i, j, k}), q);
        const auto p_ijl = on(nerve, c.morphism({i, j, l}), q);
        const auto p_ikl = on(nerve, c.morphism({i, k, l}), q);
        const auto p_jkl = on(nerve, c.morphism({j, k, l}), q);
        for (std::size_t s = 0; s < a_ij.size(); ++s) {
          const Quatd lhs = p_ikl[s] * p_ijk[s];
          const Quatd rhs = p_ijl[s] * a_ij[s](p_jkl[s]);
          record(e, s, scale_free_residual(lhs, rhs), log_scale_gap(lhs, rhs));
        }
      });
}

CheckReport groupoid_oracle_check(const BitorsorCocycle& c, double tol)
{
  using M = GroupoidMorphismd;
  const Nerve& nerve = *c.nerve;
  return run_cocycle_check(
      c, tol,
      [&](const Simplex& t, ResidualEntry& e) {
        const int i = t[0], j = t[1], k = t[2];
        const auto a_ij = on(nerve, c.object({i, j}), t);
        const auto a_jk = on(nerve, c.object({j, k}), t);
        const auto a_ik = on(nerve, c.object({i, k}), t);
        const auto& p = c.morphism(t).values;
        for (std::size_t s = 0; s < p.size(); ++s) {
          // psi_ijk : E_ij (x) E_jk -> E_ik
          const M psi(p[s], a_ij[s] * a_jk[s]);
          record(e, s, rotation_residual(psi.target(), a_ik[s]));
        }
      },
      [&](const Simplex& q, ResidualEntry& e) {
        const int i = q[0], j = q[1], k = q[2], l = q[3];
        const auto a_ij = on(nerve, c.object({i, j}), q);
        const auto a_jk = on(nerve, c.object({j, k}), q);
        const auto a_kl = on(nerve, c.object({k, l}), q);
        const auto a_ik = on(nerve, c.object({i, k}), q);
        const auto a_jl = on(nerve, c.object({j, l}), q);
        const auto p_ijk = on(nerve, c.morphism({i, j, k}), q);
        const auto p_ijl = on(nerve, c.morphism({i, j, l}), q);
        const auto p_ikl = on(nerve, c.morphism({i, k, l}), q);
        const auto p_jkl = on(nerve, c.morphism({j, k, l}), q);
        for (std::size_t s = 0; s < a_ij.size(); ++s) {
          const M psi_ijk(p_ijk[s], a_ij[s] * a_jk[s]);
          const M psi_jkl(p_jkl[s], a_jk[s] * a_kl[s]);
          const M psi_ikl(p_ikl[s], a_ik[s] * a_kl[s]);
          const M psi_ijl(p_ijl[s], a_ij[s] * a_jl[s]);
          // psi_ikl o (psi_ijk (x) Id)  versus  psi_ijl o (Id (x) psi_jkl)
          const M across = compose_or_rebase(psi_ikl, tensor(psi_ijk, M::identity(a_kl[s])));
          const M down = compose_or_rebase(psi_ijl, tensor(M::identity(a_ij[s]), psi_jkl));
          record(e, s, scale_free_residual(across.p, down.p), log_scale_gap(across.p, down.p));
        }
      });
}

CheckReport check_coboundary(const BitorsorCocycle& a, const BitorsorCocycle& b,
                             const CoboundaryData& cob, double tol)
{
  require_fields(a);
  require_fields(b);
  if (!(*a.nerve == *b.nerve))
    throw Error(Errc::NerveMismatch, "cocycles live on different nerves");
  const Nerve& nerve = *a.nerve;
  require_fields(nerve, cob);

  const auto& pairs = nerve.pairs();
  const auto& triples = nerve.triples();
  std::vector<ResidualEntry> entries(pairs.size() + triples.size());
  parallel_for(entries.size(), [&](std::size_t t) {
    if (t < pairs.size()) {
      const Simplex& ij = pairs[t].index;
      ResidualEntry& e = entries[t] = {ij, "object"};
      const auto m_i = on(nerve, cob.chart(ij[0]), ij);
      const auto m_j = on(nerve, cob.chart(ij[1]), ij);
      const auto& n = cob.pair(ij).values;
      const auto& alpha = a.object(ij).values;
      const auto& alpha2 = b.object(ij).values;
      for (std::size_t s = 0; s < n.size(); ++s) {
        record(e, s, rotation_residual(delta(n[s]) * alpha2[s],
                                       m_i[s].inverse() * alpha[s] * m_j[s]));
      }
      return;
    }
    const Simplex& tri = triples[t - pairs.size()].index;
    ResidualEntry& e = entries[t] = {tri, "morphism"};
    const int i = tri[0], j = tri[1], k = tri[2];
    const auto m_i = on(nerve, cob.chart(i), tri);
    const auto n_ij = on(nerve, cob.pair({i, j}), tri);
    const auto n_jk = on(nerve, cob.pair({j, k}), tri);
    const auto n_ik = on(nerve, cob.pair({i, k}), tri);
    const auto alpha2_ij = on(nerve, b.object({i, j}), tri);
    const auto& p = a.morphism(tri).values;
    const auto& p2 = b.morphism(tri).values;
    for (std::size_t s = 0; s < p.size(); ++s) {
      const Quatd lhs = n_ik[s] * p2[s];
      const Quatd rhs = m_i[s].inverse()(p[s]) * n_ij[s] * alpha2_ij[s](n_jk[s]);
      record(e, s, scale_free_residual(lhs, rhs), log_scale_gap(lhs, rhs));
    }
  });
  return finish(std::move(entries), tol, false);
}

BitorsorCocycle apply_coboundary(const BitorsorCocycle& a, const CoboundaryData& cob)
{
  require_fields(a);
  const Nerve& nerve = *a.nerve;
  require_fields(nerve, cob);

  BitorsorCocycle b{a.nerve, {}, {}};
  for (const auto& ov : nerve.pairs()) {
    const Simplex& ij = ov.index;
    const auto m_i = on(nerve, cob.chart(ij[0]), ij);
    const auto m_j = on(nerve, cob.chart(ij[1]), ij);
    const auto& n = cob.pair(ij).values;
    const auto& alpha = a.object(ij).values;
    FieldR out{ij, {}};
    for (std::size_t s = 0; s < n.size(); ++s)
      out.values.push_back(delta(n[s]).inverse() * m_i[s].inverse() * alpha[s] * m_j[s]);
    b.objects.emplace(ij, std::move(out));
  }
  for (const auto& ov : nerve.triples()) {
    const Simplex& tri = ov.index;
    const int i = tri[0], j = tri[1], k = tri[2];
    const auto m_i = on(nerve, cob.chart(i), tri);
    const auto n_ij = on(nerve, cob.pair({i, j}), tri);
    const auto n_jk = on(nerve, cob.pair({j, k}), tri);
    const auto n_ik = on(nerve, cob.pair({i, k}), tri);
    const auto alpha2_ij = on(nerve, b.object({i, j}), tri);
    const auto& p = a.morphism(tri).values;
    FieldQ out{tri, {}};
    for (std::size_t s = 0; s < p.size(); ++s)
      out.values.push_back(n_ik[s].inverse() * m_i[s].inverse()(p[s]) * n_ij[s] * alpha2_ij[s](n_jk[s]));
    b.morphisms.emplace(tri, std::move(out));
  }
  return b;
}

BitorsorCocycle trivial_cocycle(std::shared_ptr<const Nerve> nerve)
{
  BitorsorCocycle c{nerve, {}, {}};
  for (const auto& ov : nerve->pairs())
    c.objects.emplace(ov.index, FieldR{ov.index, std::vector<Rotation3d>(ov.ids.size())});
  for (const auto& ov : nerve->triples())
    c.morphisms.emplace(ov.index, FieldQ{ov.index, std::vector<Quatd>(ov.ids.size(), Quatd::one())});
  return c;
}

CoboundaryData identity_coboundary(const Nerve& nerve)
{
  CoboundaryData cob;
  for (const auto& ov : nerve.charts())
    cob.charts.emplace(ov.index[0], FieldR{ov.index, std::vector<Rotation3d>(ov.ids.size())});
  for (const auto& ov : nerve.pairs())
    cob.pairs.emplace(ov.index, FieldQ{ov.index, std::vector<Quatd>(ov.ids.size(), Quatd::one())});
  return cob;
}

CoboundaryData inverse_coboundary(const Nerve& nerve, const CoboundaryData& cob)
{
  require_fields(nerve, cob);
  CoboundaryData out;
  for (const auto& [i, m] : cob.charts) {
    FieldR inv{m.overlap, {}};
    for (const auto& r : m.values)
      inv.values.push_back(r.inverse());
    out.charts.emplace(i, std::move(inv));
  }
  for (const auto& ov : nerve.pairs()) {
    const Simplex& ij = ov.index;
    const auto m_i = on(nerve, cob.chart(ij[0]), ij);
    const auto& n = cob.pair(ij).values;
    FieldQ inv{ij, {}};
    for (std::size_t s = 0; s < n.size(); ++s)
      inv.values.push_back(m_i[s](n[s].inverse()));
    out.pairs.emplace(ij, std::move(inv));
  }
  return out;
}

CoboundaryData compose_coboundaries(const Nerve& nerve, const CoboundaryData& first,
                                    const CoboundaryData& second)
{
  require_fields(nerve, first);
  require_fields(nerve, second);
  CoboundaryData out;
  for (const auto& ov : nerve.charts()) {
    const int i = ov.index[0];
    if (ov.ids.empty())
      continue;
    const auto& m = first.chart(i).values;
    const auto& m2 = second.chart(i).values;
    FieldR prod{ov.index, {}};
    for (std::size_t s = 0; s < m.size(); ++s)
      prod.values.push_back(m[s] * m2[s]);
    out.charts.emplace(i, std::move(prod));
  }
  for (const auto& ov : nerve.pairs()) {
    const Simplex& ij = ov.index;
    const auto m2_i = on(nerve, second.chart(ij[0]), ij);
    const auto& n = first.pair(ij).values;
    const auto& n2 = second.pair(ij).values;
    FieldQ prod{ij, {}};
    for (std::size_t s = 0; s < n.size(); ++s)
      prod.values.push_back(m2_i[s].inverse()(n[s]) * n2[s]);
    out.pairs.emplace(ij, std::move(prod));
  }
  return out;
}

CoboundaryData random_coboundary(const Nerve& nerve, std::uint64_t seed)
{
  Rng rng(seed);
  CoboundaryData cob;
  for (const auto& ov : nerve.charts()) {
    FieldR m{ov.index, {}};
    for (std::size_t s = 0; s < ov.ids.size(); ++s)
      m.values.emplace_back(random_versor(rng));
    cob.charts.emplace(ov.index[0], std::move(m));
  }
  for (const auto& ov : nerve.pairs()) {
    FieldQ n{ov.index, {}};
    for (std::size_t s = 0; s < ov.ids.size(); ++s)
      n.values.push_back(random_nonzero_quat(rng));
    cob.pairs.emplace(ov.index, std::move(n));
  }
  return cob;
}

SyntheticCocycle synth_coboundary_cocycle(std::shared_ptr<const Nerve> nerve, std::uint64_t seed)
{
  CoboundaryData cob = random_coboundary(*nerve, seed);
  BitorsorCocycle c = apply_coboundary(trivial_cocycle(nerve), cob);
  return {std::move(c), std::move(cob)};
}

} // namespace qgerbe
