#include "qgerbe/io.hpp"

#include <fstream>
#include <sstream>

namespace qgerbe::io {

namespace {

template <typename Fn>
auto guarded(const char* what, Fn&& fn) -> decltype(fn())
{
  try {
    return fn();
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string(what) + ": " + e.what());
  }
}

void expect(bool ok, const std::string& why)
{
  if (!ok)
    throw Error(Errc::ParseError, why);
}

const char* simplex_key(std::size_t arity)
{
  switch (arity) {
  case 2: return "ij";
  case 3: return "ijk";
  default: return "ijkl";
  }
}

Simplex simplex_from_json(const json& j)
{
  expect(j.is_array(), "simplex must be an array of chart indices");
  return j.get<Simplex>();
}

json overlaps_to_json(const std::vector<Overlap>& list)
{
  json out = json::array();
  for (const auto& ov : list) {
    json entry;
    entry[simplex_key(ov.index.size())] = ov.index;
    entry["ids"] = ov.ids;
    if (!ov.points.empty()) {
      json pts = json::array();
      for (const auto& p : ov.points)
        pts.push_back(to_json(p));
      entry["points"] = std::move(pts);
    }
    out.push_back(std::move(entry));
  }
  return out;
}

void overlaps_from_json(const json& root, const char* list_key, std::size_t arity,
                        CoverDescription& cover)
{
  if (!root.contains(list_key))
    return;
  const json& list = root.at(list_key);
  expect(list.is_array(), std::string(list_key) + " must be an array");
  for (const auto& entry : list) {
    Overlap ov;
    ov.index = simplex_from_json(entry.at(simplex_key(arity)));
    expect(ov.index.size() == arity, std::string(list_key) + " entry has the wrong arity");
    if (entry.contains("ids"))
      ov.ids = entry.at("ids").get<std::vector<SampleId>>();
    if (entry.contains("points")) {
      for (const auto& p : entry.at("points"))
        ov.points.push_back(quat_from_json(p));
    }
    cover.overlaps.push_back(std::move(ov));
  }
}

template <typename Value>
json field_to_json(const Field<Value>& f, const char* kind)
{
  json values = json::array();
  for (const auto& v : f.values) {
    if constexpr (std::is_same_v<Value, Rotation3d>)
      values.push_back(to_json(v.versor()));
    else
      values.push_back(to_json(v));
  }
  return {{"overlap", f.overlap}, {"kind", kind}, {"values", std::move(values)}};
}

struct RawField {
  Simplex overlap;
  std::string kind;
  std::vector<Quatd> values;
};

std::vector<RawField> fields_from_json(const json& root)
{
  std::vector<RawField> out;
  if (!root.contains("fields"))
    return out;
  for (const auto& f : root.at("fields")) {
    RawField raw{simplex_from_json(f.at("overlap")), f.at("kind").get<std::string>(), {}};
    expect(raw.kind == "R" || raw.kind == "Q", "field kind must be \"R\" or \"Q\"");
    for (const auto& v : f.at("values"))
      raw.values.push_back(quat_from_json(v));
    out.push_back(std::move(raw));
  }
  return out;
}

FieldR rotation_field(const RawField& raw)
{
  FieldR f{raw.overlap, {}};
  for (const auto& q : raw.values) {
    expect(q.squared_norm() > 0.0, "rotation field value is the zero quaternion");
    f.values.emplace_back(q);
  }
  return f;
}

json chain_to_json(const TransitionMap& t)
{
  json chain = json::array();
  for (const auto& step : t.steps) {
    json s{{"op", std::string(to_string(step.op))}};
    switch (step.op) {
    case Step::Op::Invert: break;
    case Step::Op::Linear: s["arg"] = matrix_to_json(step.linear); break;
    default: s["arg"] = to_json(step.arg); break;
    }
    chain.push_back(std::move(s));
  }
  return chain;
}

TransitionMap chain_from_json(const json& chain)
{
  TransitionMap t;
  for (const auto& s : chain) {
    switch (parse_step_op(s.at("op").get<std::string>())) {
    case Step::Op::LeftMul: t.steps.push_back(Step::left_mul(quat_from_json(s.at("arg")))); break;
    case Step::Op::RightMul: t.steps.push_back(Step::right_mul(quat_from_json(s.at("arg")))); break;
    case Step::Op::Translate: t.steps.push_back(Step::translate(quat_from_json(s.at("arg")))); break;
    case Step::Op::Invert: t.steps.push_back(Step::invert()); break;
    case Step::Op::Linear: t.steps.push_back(Step::linear_map(matrix_from_json(s.at("arg")))); break;
    }
  }
  return t;
}

} // namespace

json to_json(const Quatd& q)
{
  return json::array({q.w, q.x, q.y, q.z});
}

Quatd quat_from_json(const json& j)
{
  return guarded("quaternion", [&] {
    expect(j.is_array() && j.size() == 4, "quaternion must be an array of 4 numbers");
    return Quatd(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
  });
}

json matrix_to_json(const Matrix4d& m)
{
  json out = json::array();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c)
      out.push_back(m(r, c));
  }
  return out;
}

Matrix4d matrix_from_json(const json& j)
{
  return guarded("matrix", [&] {
    expect(j.is_array() && j.size() == 16, "matrix must be an array of 16 numbers (row-major)");
    Matrix4d m;
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c)
        m(r, c) = j[static_cast<std::size_t>(4 * r + c)].get<double>();
    }
    return m;
  });
}

json to_json(const ConformalElementd& c)
{
  return {{"p", to_json(c.p())}, {"q", to_json(c.q())}, {"lambda", c.lambda()}};
}

ConformalElementd conformal_from_json(const json& j)
{
  return guarded("conformal element", [&] {
    return ConformalElementd(quat_from_json(j.at("p")), quat_from_json(j.at("q")));
  });
}

json to_json(const GroupoidMorphismd& m)
{
  return {{"p", to_json(m.p)}, {"source_versor", to_json(m.source.versor())}};
}

GroupoidMorphismd morphism_from_json(const json& j)
{
  return guarded("groupoid morphism", [&] {
    return GroupoidMorphismd(quat_from_json(j.at("p")), Rotation3d(quat_from_json(j.at("source_versor"))));
  });
}

json to_json(const Bimoduled& b)
{
  const auto& l = b.left_generators();
  const auto& r = b.right_generators();
  return {{"Li", matrix_to_json(l[0])}, {"Lj", matrix_to_json(l[1])}, {"Lk", matrix_to_json(l[2])},
          {"Ri", matrix_to_json(r[0])}, {"Rj", matrix_to_json(r[1])}, {"Rk", matrix_to_json(r[2])}};
}

Bimoduled bimodule_from_json(const json& j)
{
  return guarded("bimodule", [&] {
    return Bimoduled({matrix_from_json(j.at("Li")), matrix_from_json(j.at("Lj")), matrix_from_json(j.at("Lk"))},
                     {matrix_from_json(j.at("Ri")), matrix_from_json(j.at("Rj")), matrix_from_json(j.at("Rk"))});
  });
}

json to_json(const Nerve& n)
{
  return {{"charts", n.chart_count()},
          {"pairs", overlaps_to_json(n.pairs())},
          {"triples", overlaps_to_json(n.triples())},
          {"quads", overlaps_to_json(n.quads())}};
}

Nerve nerve_from_json(const json& j)
{
  return guarded("nerve", [&] {
    CoverDescription cover;
    cover.chart_count = j.at("charts").get<int>();
    overlaps_from_json(j, "pairs", 2, cover);
    overlaps_from_json(j, "triples", 3, cover);
    overlaps_from_json(j, "quads", 4, cover);
    return build_nerve(cover);
  });
}

json to_json(const BitorsorCocycle& c)
{
  json out = to_json(*c.nerve);
  json fields = json::array();
  for (const auto& [s, f] : c.objects)
    fields.push_back(field_to_json(f, "R"));
  for (const auto& [s, f] : c.morphisms)
    fields.push_back(field_to_json(f, "Q"));
  out["fields"] = std::move(fields);
  return out;
}

BitorsorCocycle cocycle_from_json(const json& j)
{
  return guarded("cocycle", [&] {
    BitorsorCocycle c{std::make_shared<const Nerve>(nerve_from_json(j)), {}, {}};
    for (const auto& raw : fields_from_json(j)) {
      if (raw.kind == "R") {
        expect(raw.overlap.size() == 2, "object fields live on pairs");
        c.objects[raw.overlap] = rotation_field(raw);
      } else {
        expect(raw.overlap.size() == 3, "morphism fields live on triples");
        c.morphisms[raw.overlap] = FieldQ{raw.overlap, raw.values};
      }
    }
    return c;
  });
}

json to_json(const CoboundaryData& cob)
{
  json fields = json::array();
  for (const auto& [i, f] : cob.charts)
    fields.push_back(field_to_json(f, "R"));
  for (const auto& [s, f] : cob.pairs)
    fields.push_back(field_to_json(f, "Q"));
  return {{"fields", std::move(fields)}};
}

CoboundaryData coboundary_from_json(const json& j, const Nerve& nerve)
{
  return guarded("coboundary", [&] {
    CoboundaryData cob;
    for (const auto& raw : fields_from_json(j)) {
      if (raw.kind == "R") {
        expect(raw.overlap.size() == 1, "coboundary object fields live on charts [i]");
        cob.charts[raw.overlap[0]] = rotation_field(raw);
        validate_field(nerve, cob.charts[raw.overlap[0]]);
      } else {
        expect(raw.overlap.size() == 2, "coboundary morphism fields live on pairs");
        cob.pairs[raw.overlap] = FieldQ{raw.overlap, raw.values};
        validate_field(nerve, cob.pairs[raw.overlap]);
      }
    }
    return cob;
  });
}

json to_json(const Atlas& a)
{
  json pairs = json::array();
  for (const auto& p : a.pairs) {
    json pts = json::array();
    for (const auto& x : p.points)
      pts.push_back(to_json(x));
    pairs.push_back({{"ij", p.ij}, {"chain", chain_to_json(p.map)}, {"ids", p.ids}, {"points", std::move(pts)}});
  }
  json triples = json::array();
  for (const auto& t : a.triples)
    triples.push_back({{"ijk", t.index}, {"ids", t.ids}});
  json quads = json::array();
  for (const auto& q : a.quads)
    quads.push_back({{"ijkl", q.index}, {"ids", q.ids}});
  return {{"charts", a.chart_count}, {"pairs", std::move(pairs)}, {"triples", std::move(triples)},
          {"quads", std::move(quads)}};
}

Atlas atlas_from_json(const json& j)
{
  return guarded("atlas", [&] {
    Atlas a;
    a.chart_count = j.at("charts").get<int>();
    for (const auto& p : j.at("pairs")) {
      AtlasPair pair{simplex_from_json(p.at("ij")), chain_from_json(p.at("chain")), {}, {}};
      expect(pair.ij.size() == 2, "atlas pair must have two chart indices");
      for (const auto& x : p.at("points"))
        pair.points.push_back(quat_from_json(x));
      if (p.contains("ids")) {
        pair.ids = p.at("ids").get<std::vector<SampleId>>();
      } else {
        for (std::size_t s = 0; s < pair.points.size(); ++s)
          pair.ids.push_back(static_cast<SampleId>(s));
      }
      expect(pair.ids.size() == pair.points.size(), "atlas pair ids and points differ in length");
      a.pairs.push_back(std::move(pair));
    }
    if (j.contains("triples")) {
      for (const auto& t : j.at("triples"))
        a.triples.push_back({simplex_from_json(t.at("ijk")), t.at("ids").get<std::vector<SampleId>>()});
    }
    if (j.contains("quads")) {
      for (const auto& q : j.at("quads"))
        a.quads.push_back({simplex_from_json(q.at("ijkl")), q.at("ids").get<std::vector<SampleId>>()});
    }
    a.nerve(); // validates the combinatorics
    return a;
  });
}

json to_json(const CheckReport& r)
{
  json per = json::array();
  for (const auto& e : r.per_simplex) {
    per.push_back({{"simplex", e.simplex},
                   {"kind", e.kind},
                   {"max_residual", e.max_residual},
                   {"point_index", e.point_index},
                   {"max_log_scale", e.max_log_scale}});
  }
  json worst = nullptr;
  if (const auto w = r.worst())
    worst = {{"simplex", w->simplex}, {"point_index", w->point_index}, {"residual", w->max_residual}};
  return {{"pass", r.pass}, {"vacuous", r.vacuous}, {"tol", r.tol}, {"worst", std::move(worst)},
          {"per_simplex", std::move(per)}};
}

json schemas()
{
  return {
      {"basis", "quaternions are identified with R^4 through the ordered basis (1, i, j, k)"},
      {"Quat", "[w, x, y, z]"},
      {"Matrix4", "array of 16 numbers, row-major, acting on column vectors [w, x, y, z]"},
      {"ConformalElement", {{"p", "Quat"}, {"q", "Quat"}, {"lambda", "number; |p| = |q| = sqrt(lambda)"}}},
      {"GroupoidMorphism", {{"p", "Quat (nonzero)"}, {"source_versor", "Quat (unit, sign ignored)"}}},
      {"Bimodule", {{"Li", "Matrix4"}, {"Lj", "Matrix4"}, {"Lk", "Matrix4"},
                    {"Ri", "Matrix4"}, {"Rj", "Matrix4"}, {"Rk", "Matrix4"}}},
      {"Nerve", {{"charts", "integer"},
                 {"pairs", "[{ij: [i,j], ids: [sample ids] (default 0..n-1), points: [Quat] (optional)}]"},
                 {"triples", "[{ijk: [i,j,k], ids, points?}]"},
                 {"quads", "[{ijkl: [i,j,k,l], ids, points?}]"}}},
      {"Cocycle", {{"...", "Nerve keys"},
                   {"fields", "[{overlap: [i,j], kind: \"R\", values: [versor Quat]} | "
                              "{overlap: [i,j,k], kind: \"Q\", values: [Quat]}]"}}},
      {"Coboundary", {{"fields", "[{overlap: [i], kind: \"R\", values} | {overlap: [i,j], kind: \"Q\", values}]"}}},
      {"Atlas", {{"charts", "integer"},
                 {"pairs", "[{ij, chain: [{op: left_mul|right_mul|translate|invert|linear, arg: Quat|Matrix4}], "
                           "ids, points: [Quat in chart j coordinates]}]"},
                 {"triples", "[{ijk, ids}]"},
                 {"quads", "[{ijkl, ids}]"}}},
      {"Report", {{"pass", "bool"}, {"vacuous", "bool"}, {"tol", "number"},
                  {"worst", "{simplex, point_index, residual} | null"},
                  {"per_simplex", "[{simplex, kind: object|coherence|morphism, max_residual, point_index, max_log_scale}]"}}},
      {"RunConfig", {{"keys", "command, input, output, tol, seed, samples, charts, jacobian, atlas, atlas_file, filter, shear, inject_failure"},
                     {"precedence", "command-line flags > config file > defaults"}}},
  };
}

json read_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw Error(Errc::ParseError, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, path + ": " + e.what());
  }
}

} // namespace qgerbe::io
