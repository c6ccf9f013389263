#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "qgerbe/rotation.hpp"

namespace qgerbe {

/// Ordered chart indices of an overlap, e.g. {i, j} for U_ij.
using Simplex = std::vector<int>;
using SampleId = std::int64_t;

/**
 * One overlap of the cover with its shared sample points.
 *
 * Sample points are identified across overlaps by id, so restriction between
 * an overlap and one of its faces is exact index selection. `points` carries
 * optional coordinates (in the chart of the first index) for reference only.
 */
struct Overlap {
  Simplex index;
  std::vector<SampleId> ids;
  std::vector<Quatd> points;
};

struct CoverDescription {
  int chart_count = 0;
  /// Overlaps of arity 2, 3 or 4 in any order.
  std::vector<Overlap> overlaps;
};

/// True if `face` is obtained from `simplex` by deleting entries (or is equal).
bool is_face(const Simplex& face, const Simplex& simplex);

/// The codimension-one faces of a simplex, in deletion order (drop 0, drop 1, ...).
std::vector<Simplex> faces(const Simplex& simplex);

/**
 * The combinatorics of a good cover: charts and their pairwise, triple and
 * quadruple overlaps, closed under faces.
 *
 * Charts are exposed as arity-one overlaps whose sample ids are the union of
 * the ids of every overlap containing them.
 */
class Nerve {
public:
  Nerve() = default;

  int chart_count() const { return chart_count_; }
  const std::vector<Overlap>& charts() const { return charts_; }
  const std::vector<Overlap>& pairs() const { return by_arity_[0]; }
  const std::vector<Overlap>& triples() const { return by_arity_[1]; }
  const std::vector<Overlap>& quads() const { return by_arity_[2]; }

  bool contains(const Simplex& s) const;

  /// Any declared overlap (arity 1..4); throws NotAFace for undeclared ones.
  const Overlap& overlap(const Simplex& s) const;

  /// For each sample of `to`, its position in the sample list of `from`.
  /// `from` must be a declared face of the declared overlap `to`.
  std::vector<std::size_t> index_map(const Simplex& from, const Simplex& to) const;

  bool operator==(const Nerve& other) const;

  friend Nerve build_nerve(const CoverDescription& cover);

private:
  int chart_count_ = 0;
  std::vector<Overlap> charts_;
  std::array<std::vector<Overlap>, 3> by_arity_;
  std::map<Simplex, std::pair<int, std::size_t>> lookup_;
};

bool operator==(const Overlap& a, const Overlap& b);

/// Validates and closes a cover description; throws MalformedCover.
Nerve build_nerve(const CoverDescription& cover);

/// Every increasing pair, triple and quadruple of `chart_count` charts, each
/// sharing the sample ids 0..samples-1.
Nerve complete_nerve(int chart_count, int samples);

/// A function on one overlap, sampled at that overlap's points.
template <typename Value>
struct Field {
  Simplex overlap;
  std::vector<Value> values;
};

using FieldQ = Field<Quatd>;
using FieldR = Field<Rotation3d>;

/// The field restricted from its own overlap to a larger overlap `to`.
template <typename Value>
Field<Value> restrict(const Nerve& nerve, const Field<Value>& field, const Simplex& to)
{
  const auto map = nerve.index_map(field.overlap, to);
  Field<Value> out{to, {}};
  out.values.reserve(map.size());
  for (std::size_t idx : map)
    out.values.push_back(field.values.at(idx));
  return out;
}

/// Checks the value count against the overlap (and nonzero values for FieldQ);
/// throws MissingField.
void validate_field(const Nerve& nerve, const FieldQ& field);
void validate_field(const Nerve& nerve, const FieldR& field);

} // namespace qgerbe
