#include "qgerbe/atlas.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <unordered_map>

#include "qgerbe/parallel.hpp"
#include "qgerbe/random.hpp"

namespace qgerbe {

namespace {

constexpr double kPoleRadius = 1e-12;
constexpr double kRelativeStep = 1e-5;
constexpr double kRichardsonTrigger = 1e-6;

std::string label(const Simplex& s)
{
  std::string out = "(";
  for (std::size_t a = 0; a < s.size(); ++a)
    out += (a ? "," : "") + std::to_string(s[a]);
  return out + ")";
}

Quatd require_nonzero(const Quatd& q, const char* what)
{
  if (!(q.squared_norm() > 0.0))
    throw Error(Errc::ZeroQuaternion, what);
  return q;
}

Quatd apply_step(const Step& step, const Quatd& y)
{
  switch (step.op) {
  case Step::Op::LeftMul: return step.arg * y;
  case Step::Op::RightMul: return y * step.arg;
  case Step::Op::Translate: return y + step.arg;
  case Step::Op::Invert:
    if (y.norm() < kPoleRadius) {
      std::ostringstream os;
      os << "inversion at " << y;
      throw Error(Errc::PoleHit, os.str());
    }
    return y.inverse();
  case Step::Op::Linear: return apply(step.linear, y);
  }
  return y;
}

std::vector<SampleId> iota_ids(int samples)
{
  std::vector<SampleId> ids(static_cast<std::size_t>(std::max(samples, 0)));
  for (std::size_t a = 0; a < ids.size(); ++a)
    ids[a] = static_cast<SampleId>(a);
  return ids;
}

/// Charts psi_i given as maps from a common model space; every overlap holds
/// every sample. transition(i, j) must realize psi_i o psi_j^-1.
template <typename Chart, typename Transition>
Atlas global_chart_atlas(int n, const std::vector<Quatd>& model_points, Chart&& chart,
                         Transition&& transition)
{
  Atlas atlas;
  atlas.chart_count = n;
  const auto ids = iota_ids(static_cast<int>(model_points.size()));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j)
        continue;
      AtlasPair pair{{i, j}, transition(i, j), ids, {}};
      for (const auto& x : model_points)
        pair.points.push_back(chart(j, x));
      atlas.pairs.push_back(std::move(pair));
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      for (int k = j + 1; k < n; ++k) {
        atlas.triples.push_back({{i, j, k}, ids});
        for (int l = k + 1; l < n; ++l)
          atlas.quads.push_back({{i, j, k, l}, ids});
      }
    }
  }
  return atlas;
}

Atlas s4_stereo(const AtlasParams& params)
{
  Rng rng(params.seed);
  std::uniform_real_distribution<double> radius(std::log(0.5), std::log(2.0));
  std::vector<Quatd> north;
  for (int s = 0; s < params.samples; ++s)
    north.push_back(random_versor(rng) * std::exp(radius(rng)));

  Atlas atlas;
  atlas.chart_count = 2;
  const auto ids = iota_ids(params.samples);
  const TransitionMap inversion{{Step::invert()}};
  AtlasPair to_south{{0, 1}, inversion, ids, north};
  AtlasPair to_north{{1, 0}, inversion, ids, {}};
  for (const auto& x : north)
    to_north.points.push_back(x.inverse());
  atlas.pairs.push_back(std::move(to_south));
  atlas.pairs.push_back(std::move(to_north));
  return atlas;
}

Atlas affine(const AtlasParams& params)
{
  const int n = params.charts > 0 ? params.charts : 3;
  Rng rng(params.seed);
  std::vector<Quatd> a, b, c;
  for (int i = 0; i < n; ++i) {
    a.push_back(random_nonzero_quat(rng, 0.5));
    b.push_back(random_nonzero_quat(rng, 0.5));
    c.push_back(random_quat(rng));
  }
  std::vector<Quatd> model;
  for (int s = 0; s < params.samples; ++s)
    model.push_back(random_quat(rng) * 0.5);

  return global_chart_atlas(
      n, model, [&](int i, const Quatd& x) { return a[i] * x * b[i] + c[i]; },
      [&](int i, int j) {
        return TransitionMap{{Step::translate(-c[j]), Step::left_mul(a[j].inverse()),
                              Step::right_mul(b[j].inverse()), Step::left_mul(a[i]),
                              Step::right_mul(b[i]), Step::translate(c[i])}};
      });
}

Atlas torus_identity(const AtlasParams& params)
{
  const int n = params.charts > 0 ? params.charts : 4;
  Rng rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Quatd> model;
  for (int s = 0; s < params.samples; ++s) {
    const double w = unit(rng), x = unit(rng), y = unit(rng), z = unit(rng);
    model.emplace_back(w, x, y, z);
  }
  return global_chart_atlas(
      n, model, [](int, const Quatd& x) { return x; }, [](int, int) { return TransitionMap{}; });
}

/// psi_i(X) = a_i (X - c_i)^-1 b_i + d_i with the poles c_i kept away from
/// the sample region |X| <= 0.5.
Atlas synthetic_conformal(const AtlasParams& params)
{
  const int n = params.charts > 0 ? params.charts : 4;
  Rng rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Quatd> a, b, c, d;
  for (int i = 0; i < n; ++i) {
    a.push_back(random_nonzero_quat(rng, 0.5));
    b.push_back(random_nonzero_quat(rng, 0.5));
    c.push_back(random_versor(rng) * 2.0);
    d.push_back(random_quat(rng));
  }
  std::vector<Quatd> model;
  for (int s = 0; s < params.samples; ++s)
    model.push_back(random_versor(rng) * (0.5 * unit(rng)));

  return global_chart_atlas(
      n, model, [&](int i, const Quatd& x) { return a[i] * (x - c[i]).inverse() * b[i] + d[i]; },
      [&](int i, int j) {
        return TransitionMap{{Step::translate(-d[j]), Step::left_mul(a[j].inverse()),
                              Step::right_mul(b[j].inverse()), Step::invert(),
                              Step::translate(c[j] - c[i]), Step::invert(), Step::left_mul(a[i]),
                              Step::right_mul(b[i]), Step::translate(d[i])}};
      });
}

/// Greedy nearest-neighbour walk over the points starting at index 0.
std::vector<std::size_t> walk_order(const std::vector<Quatd>& points)
{
  std::vector<std::size_t> order;
  if (points.empty())
    return order;
  std::vector<bool> used(points.size(), false);
  std::size_t current = 0;
  used[0] = true;
  order.push_back(0);
  for (std::size_t step = 1; step < points.size(); ++step) {
    std::size_t best = points.size();
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < points.size(); ++s) {
      if (used[s])
        continue;
      const double dist = (points[s] - points[current]).norm();
      if (dist < best_dist) {
        best_dist = dist;
        best = s;
      }
    }
    used[best] = true;
    order.push_back(best);
    current = best;
  }
  return order;
}

} // namespace

Step Step::left_mul(const Quatd& a)
{
  return {Op::LeftMul, require_nonzero(a, "left multiplier must be nonzero")};
}

Step Step::right_mul(const Quatd& b)
{
  return {Op::RightMul, require_nonzero(b, "right multiplier must be nonzero")};
}

Step Step::translate(const Quatd& c)
{
  return {Op::Translate, c};
}

Step Step::invert()
{
  return {Op::Invert, Quatd{}};
}

Step Step::linear_map(const Matrix4d& m)
{
  return {Op::Linear, Quatd{}, m};
}

std::string_view to_string(Step::Op op)
{
  switch (op) {
  case Step::Op::LeftMul: return "left_mul";
  case Step::Op::RightMul: return "right_mul";
  case Step::Op::Translate: return "translate";
  case Step::Op::Invert: return "invert";
  case Step::Op::Linear: return "linear";
  }
  return "?";
}

Step::Op parse_step_op(std::string_view name)
{
  for (auto op : {Step::Op::LeftMul, Step::Op::RightMul, Step::Op::Translate, Step::Op::Invert,
                  Step::Op::Linear}) {
    if (to_string(op) == name)
      return op;
  }
  throw Error(Errc::ParseError, "unknown transition step '" + std::string(name) + "'");
}

TransitionMap TransitionMap::then(const TransitionMap& next) const
{
  TransitionMap out = *this;
  out.steps.insert(out.steps.end(), next.steps.begin(), next.steps.end());
  return out;
}

Quatd transition_eval(const TransitionMap& t, const Quatd& x)
{
  Quatd y = x;
  for (const auto& step : t.steps)
    y = apply_step(step, y);
  return y;
}

std::string_view to_string(JacobianMode mode)
{
  return mode == JacobianMode::Analytic ? "analytic" : "fd";
}

JacobianMode parse_jacobian_mode(std::string_view name)
{
  if (name == "analytic")
    return JacobianMode::Analytic;
  if (name == "fd" || name == "finite_difference")
    return JacobianMode::FiniteDifference;
  throw Error(Errc::ParseError, "unknown jacobian mode '" + std::string(name) + "'");
}

Matrix4d step_jacobian(const Step& step, const Quatd& y)
{
  switch (step.op) {
  case Step::Op::LeftMul: return left_matrix(step.arg);
  case Step::Op::RightMul: return right_matrix(step.arg);
  case Step::Op::Translate: return Matrix4d::Identity();
  case Step::Op::Invert: {
    if (y.norm() < kPoleRadius)
      throw Error(Errc::PoleHit, "derivative of inversion at the pole");
    const Quatd inv = y.inverse();
    return phi_matrix(-inv, inv);
  }
  case Step::Op::Linear: return step.linear;
  }
  return Matrix4d::Identity();
}

Matrix4d finite_difference_jacobian(const TransitionMap& t, const Quatd& x, double h)
{
  const double scale = std::max(1.0, x.norm());
  if (!(h > 64.0 * std::numeric_limits<double>::epsilon() * scale))
    throw Error(Errc::StepTooSmall, "finite-difference step " + std::to_string(h) + " is too small");
  Matrix4d j;
  for (int a = 0; a < 4; ++a) {
    const Quatd e = Quatd::basis(a) * h;
    j.col(a) = (transition_eval(t, x + e) - transition_eval(t, x - e)).coeffs() / (2.0 * h);
  }
  return j;
}

Matrix4d jacobian(const TransitionMap& t, const Quatd& x, JacobianMode mode)
{
  if (mode == JacobianMode::Analytic) {
    Matrix4d j = Matrix4d::Identity();
    Quatd y = x;
    for (const auto& step : t.steps) {
      j = step_jacobian(step, y) * j;
      y = apply_step(step, y);
    }
    return j;
  }
  const double h = kRelativeStep * std::max(1.0, x.norm());
  const Matrix4d coarse = finite_difference_jacobian(t, x, h);
  const Matrix4d fine = finite_difference_jacobian(t, x, 0.5 * h);
  if ((coarse - fine).norm() <= kRichardsonTrigger * fine.norm())
    return coarse;
  return (4.0 * fine - coarse) / 3.0;
}

const AtlasPair& Atlas::pair(const Simplex& ij) const
{
  for (const auto& p : pairs) {
    if (p.ij == ij)
      return p;
  }
  throw Error(Errc::NotAFace, "atlas has no transition for " + label(ij));
}

bool Atlas::has_pair(const Simplex& ij) const
{
  return std::any_of(pairs.begin(), pairs.end(), [&](const AtlasPair& p) { return p.ij == ij; });
}

Nerve Atlas::nerve() const
{
  CoverDescription cover;
  cover.chart_count = chart_count;
  for (const auto& p : pairs) {
    Overlap ov{p.ij, p.ids, {}};
    for (const auto& x : p.points)
      ov.points.push_back(transition_eval(p.map, x));
    cover.overlaps.push_back(std::move(ov));
  }
  for (const auto& t : triples)
    cover.overlaps.push_back({t.index, t.ids, {}});
  for (const auto& q : quads)
    cover.overlaps.push_back({q.index, q.ids, {}});
  return build_nerve(cover);
}

AtlasCheck check_atlas(const Atlas& atlas)
{
  AtlasCheck out;
  auto relative = [](const Quatd& a, const Quatd& b) {
    return (a - b).norm() / std::max(1.0, b.norm());
  };
  for (const auto& p : atlas.pairs) {
    const Simplex back{p.ij[1], p.ij[0]};
    if (!atlas.has_pair(back))
      continue;
    const auto& inverse = atlas.pair(back);
    for (const auto& x : p.points)
      out.inverse_residual = std::max(out.inverse_residual,
                                      relative(transition_eval(inverse.map, transition_eval(p.map, x)), x));
  }

  for (const auto& t : atlas.triples) {
    const int i = t.index[0], j = t.index[1], k = t.index[2];
    const auto& ij = atlas.pair({i, j});
    const auto& jk = atlas.pair({j, k});
    const auto& ik = atlas.pair({i, k});
    auto position = [](const AtlasPair& p) {
      std::unordered_map<SampleId, std::size_t> at;
      for (std::size_t s = 0; s < p.ids.size(); ++s)
        at.emplace(p.ids[s], s);
      return at;
    };
    const auto at_ij = position(ij), at_jk = position(jk), at_ik = position(ik);
    for (SampleId id : t.ids) {
      if (!at_ij.count(id) || !at_jk.count(id) || !at_ik.count(id))
        throw Error(Errc::MalformedCover, "triple " + label(t.index) + " sample " +
                                              std::to_string(id) + " is missing from a face");
      const Quatd& xk = jk.points[at_jk.at(id)];
      const Quatd xj = transition_eval(jk.map, xk);
      const Quatd via = transition_eval(ij.map, xj);
      const Quatd direct = transition_eval(ik.map, xk);
      out.triple_residual = std::max({out.triple_residual, relative(via, direct),
                                      relative(ik.points[at_ik.at(id)], xk),
                                      relative(ij.points[at_ij.at(id)], xj)});
    }
  }
  return out;
}

double factorization_tolerance(JacobianMode mode)
{
  return mode == JacobianMode::Analytic ? 1e-10 : 1e-6;
}

std::map<Simplex, JacobianField> factorize_transitions(const Atlas& atlas, JacobianMode mode)
{
  const double tol = factorization_tolerance(mode);
  std::vector<JacobianField> fields(atlas.pairs.size());
  parallel_for(atlas.pairs.size(), [&](std::size_t pi) {
    const AtlasPair& pair = atlas.pairs[pi];
    JacobianField& field = fields[pi];
    field.ij = pair.ij;
    field.samples.resize(pair.points.size());
    for (std::size_t s = 0; s < pair.points.size(); ++s) {
      JacobianSample& js = field.samples[s];
      js.jacobian = jacobian(pair.map, pair.points[s], mode);
      js.conformal_residual = conformal_residual(js.jacobian);
      try {
        const ConformalElementd f = conformal_factorize(js.jacobian, tol);
        js.lambda = f.lambda();
        js.x = f.p();
        js.y = f.q();
      } catch (const Error& e) {
        std::ostringstream os;
        os << "transition " << label(pair.ij) << " at sample " << s << " (id " << pair.ids[s]
           << ", point " << pair.points[s] << "): " << e.detail();
        throw Error(e.code(), os.str());
      }
      if (!js.x.is_finite() || !js.y.is_finite())
        throw Error(Errc::GaugeInconsistency, "non-finite factor pair on " + label(pair.ij));
    }

    const auto order = walk_order(pair.points);
    for (std::size_t step = 1; step < order.size(); ++step) {
      const Quatd& prev = field.samples[order[step - 1]].x;
      JacobianSample& cur = field.samples[order[step]];
      if ((cur.x + prev).norm() < (cur.x - prev).norm()) {
        cur.x = -cur.x;
        cur.y = -cur.y;
      }
    }
  });

  std::map<Simplex, JacobianField> out;
  for (auto& f : fields)
    out.emplace(f.ij, std::move(f));
  return out;
}

BitorsorCocycle build_tangent_cocycle(const Atlas& atlas, JacobianMode mode)
{
  const auto fields = factorize_transitions(atlas, mode);
  auto nerve = std::make_shared<const Nerve>(atlas.nerve());

  BitorsorCocycle c{nerve, {}, {}};
  for (const auto& ov : nerve->pairs()) {
    const auto& samples = fields.at(ov.index).samples;
    FieldR alpha{ov.index, {}};
    for (const auto& js : samples)
      alpha.values.push_back(delta(js.y * js.x));
    c.objects.emplace(ov.index, std::move(alpha));
  }

  for (const auto& ov : nerve->triples()) {
    const Simplex& t = ov.index;
    const Simplex ij{t[0], t[1]}, jk{t[1], t[2]};
    const auto at_ij = nerve->index_map(ij, t);
    const auto at_jk = nerve->index_map(jk, t);
    const auto& f_ij = fields.at(ij).samples;
    const auto& f_jk = fields.at(jk).samples;
    FieldQ p{t, {}};
    for (std::size_t s = 0; s < ov.ids.size(); ++s) {
      const JacobianSample& a = f_ij[at_ij[s]];
      const JacobianSample& b = f_jk[at_jk[s]];
      const Quatd g_ij = a.y * a.x;
      const Quatd g_jk = b.y * b.x;
      const Quatd g_chain = b.y * a.y * a.x * b.x;
      p.values.push_back(g_chain * (g_ij * g_jk).inverse());
    }
    c.morphisms.emplace(t, std::move(p));
  }
  return c;
}

Atlas builtin_atlas(std::string_view name, const AtlasParams& params)
{
  if (params.samples < 1)
    throw Error(Errc::MalformedCover, "an atlas needs at least one sample point");
  Atlas atlas;
  if (name == "s4_stereo")
    atlas = s4_stereo(params);
  else if (name == "affine")
    atlas = affine(params);
  else if (name == "torus_identity")
    atlas = torus_identity(params);
  else if (name == "synthetic_conformal")
    atlas = synthetic_conformal(params);
  else
    throw Error(Errc::UnknownAtlas, "no built-in atlas named '" + std::string(name) + "'");
  if (params.shear != 0.0) {
    const Simplex first = atlas.pairs.front().ij;
    atlas = with_shear(std::move(atlas), first, params.shear);
  }
  return atlas;
}

Atlas with_shear(Atlas atlas, const Simplex& ij, double amount)
{
  Matrix4d shear = Matrix4d::Identity();
  shear(0, 1) = amount;
  for (auto& p : atlas.pairs) {
    if (p.ij == ij) {
      p.map.steps.push_back(Step::linear_map(shear));
      return atlas;
    }
  }
  throw Error(Errc::NotAFace, "atlas has no transition for " + label(ij));
}

} // namespace qgerbe
