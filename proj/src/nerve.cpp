#include "qgerbe/nerve.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_map>

namespace qgerbe {

namespace {

std::string label(const Simplex& s)
{
  std::ostringstream os;
  os << '(';
  for (std::size_t a = 0; a < s.size(); ++a)
    os << (a ? "," : "") << s[a];
  os << ')';
  return os.str();
}

[[noreturn]] void malformed(const Simplex& s, const std::string& why)
{
  throw Error(Errc::MalformedCover, "overlap " + label(s) + ": " + why);
}

template <typename Value>
void check_count(const Nerve& nerve, const Field<Value>& field)
{
  if (!nerve.contains(field.overlap))
    throw Error(Errc::MissingField, "field on undeclared overlap " + label(field.overlap));
  const auto expected = nerve.overlap(field.overlap).ids.size();
  if (field.values.size() != expected) {
    std::ostringstream os;
    os << "field on " << label(field.overlap) << " has " << field.values.size()
       << " values, overlap has " << expected << " samples";
    throw Error(Errc::MissingField, os.str());
  }
}

} // namespace

bool is_face(const Simplex& face, const Simplex& simplex)
{
  std::size_t at = 0;
  for (int v : simplex) {
    if (at < face.size() && face[at] == v)
      ++at;
  }
  return at == face.size();
}

std::vector<Simplex> faces(const Simplex& simplex)
{
  std::vector<Simplex> out;
  for (std::size_t drop = 0; drop < simplex.size(); ++drop) {
    Simplex f;
    for (std::size_t a = 0; a < simplex.size(); ++a) {
      if (a != drop)
        f.push_back(simplex[a]);
    }
    out.push_back(std::move(f));
  }
  return out;
}

bool operator==(const Overlap& a, const Overlap& b)
{
  return a.index == b.index && a.ids == b.ids && a.points == b.points;
}

bool Nerve::contains(const Simplex& s) const
{
  return lookup_.count(s) != 0;
}

const Overlap& Nerve::overlap(const Simplex& s) const
{
  const auto it = lookup_.find(s);
  if (it == lookup_.end())
    throw Error(Errc::NotAFace, "overlap " + label(s) + " is not in the nerve");
  const auto [arity, pos] = it->second;
  return arity == 1 ? charts_[pos] : by_arity_[arity - 2][pos];
}

std::vector<std::size_t> Nerve::index_map(const Simplex& from, const Simplex& to) const
{
  if (!is_face(from, to))
    throw Error(Errc::NotAFace, label(from) + " is not a face of " + label(to));
  const Overlap& src = overlap(from);
  const Overlap& dst = overlap(to);

  std::unordered_map<SampleId, std::size_t> position;
  position.reserve(src.ids.size());
  for (std::size_t a = 0; a < src.ids.size(); ++a)
    position.emplace(src.ids[a], a);

  std::vector<std::size_t> out;
  out.reserve(dst.ids.size());
  for (SampleId id : dst.ids) {
    const auto it = position.find(id);
    if (it == position.end())
      throw Error(Errc::NotAFace, "sample " + std::to_string(id) + " of " + label(to) +
                                      " is missing from " + label(from));
    out.push_back(it->second);
  }
  return out;
}

bool Nerve::operator==(const Nerve& other) const
{
  return chart_count_ == other.chart_count_ && by_arity_ == other.by_arity_;
}

Nerve build_nerve(const CoverDescription& cover)
{
  if (cover.chart_count < 1)
    throw Error(Errc::MalformedCover, "a cover needs at least one chart");

  Nerve nerve;
  nerve.chart_count_ = cover.chart_count;

  for (Overlap ov : cover.overlaps) {
    const Simplex& s = ov.index;
    if (s.size() < 2 || s.size() > 4)
      malformed(s, "arity must be 2, 3 or 4");
    for (std::size_t a = 0; a < s.size(); ++a) {
      if (s[a] < 0 || s[a] >= cover.chart_count)
        malformed(s, "chart index out of range");
      for (std::size_t b = 0; b < a; ++b) {
        if (s[a] == s[b])
          malformed(s, "repeated chart index");
      }
    }
    if (ov.ids.empty()) {
      for (std::size_t a = 0; a < ov.points.size(); ++a)
        ov.ids.push_back(static_cast<SampleId>(a));
    }
    if (ov.ids.empty())
      malformed(s, "empty sample set");
    if (!ov.points.empty() && ov.points.size() != ov.ids.size())
      malformed(s, "point count differs from id count");
    if (std::set<SampleId>(ov.ids.begin(), ov.ids.end()).size() != ov.ids.size())
      malformed(s, "duplicate sample id");
    auto& bucket = nerve.by_arity_[s.size() - 2];
    for (const auto& existing : bucket) {
      if (existing.index == s)
        malformed(s, "declared twice");
    }
    bucket.push_back(std::move(ov));
  }

  for (auto& bucket : nerve.by_arity_) {
    std::sort(bucket.begin(), bucket.end(),
              [](const Overlap& a, const Overlap& b) { return a.index < b.index; });
  }

  std::vector<std::set<SampleId>> chart_ids(cover.chart_count);
  for (int arity = 2; arity <= 4; ++arity) {
    const auto& bucket = nerve.by_arity_[arity - 2];
    for (std::size_t pos = 0; pos < bucket.size(); ++pos) {
      nerve.lookup_[bucket[pos].index] = {arity, pos};
      for (int c : bucket[pos].index)
        chart_ids[c].insert(bucket[pos].ids.begin(), bucket[pos].ids.end());
    }
  }
  for (int c = 0; c < cover.chart_count; ++c) {
    nerve.charts_.push_back({{c}, {chart_ids[c].begin(), chart_ids[c].end()}, {}});
    nerve.lookup_[{c}] = {1, static_cast<std::size_t>(c)};
  }

  for (int arity = 3; arity <= 4; ++arity) {
    for (const auto& ov : nerve.by_arity_[arity - 2]) {
      for (const auto& f : faces(ov.index)) {
        if (!nerve.contains(f))
          malformed(ov.index, "face " + label(f) + " is not declared");
        const auto& face_ids = nerve.overlap(f).ids;
        const std::set<SampleId> available(face_ids.begin(), face_ids.end());
        for (SampleId id : ov.ids) {
          if (!available.count(id))
            malformed(ov.index, "sample " + std::to_string(id) + " is not in face " + label(f));
        }
      }
    }
  }
  return nerve;
}

Nerve complete_nerve(int chart_count, int samples)
{
  CoverDescription cover;
  cover.chart_count = chart_count;
  std::vector<SampleId> ids(static_cast<std::size_t>(std::max(samples, 0)));
  for (std::size_t a = 0; a < ids.size(); ++a)
    ids[a] = static_cast<SampleId>(a);

  for (int i = 0; i < chart_count; ++i) {
    for (int j = i + 1; j < chart_count; ++j) {
      cover.overlaps.push_back({{i, j}, ids, {}});
      for (int k = j + 1; k < chart_count; ++k) {
        cover.overlaps.push_back({{i, j, k}, ids, {}});
        for (int l = k + 1; l < chart_count; ++l)
          cover.overlaps.push_back({{i, j, k, l}, ids, {}});
      }
    }
  }
  return build_nerve(cover);
}

void validate_field(const Nerve& nerve, const FieldQ& field)
{
  check_count(nerve, field);
  for (std::size_t a = 0; a < field.values.size(); ++a) {
    if (!(field.values[a].squared_norm() > 0.0) || !field.values[a].is_finite())
      throw Error(Errc::MissingField, "quaternion field on " + label(field.overlap) +
                                          " is zero or non-finite at sample " + std::to_string(a));
  }
}

void validate_field(const Nerve& nerve, const FieldR& field)
{
  check_count(nerve, field);
}

} // namespace qgerbe
