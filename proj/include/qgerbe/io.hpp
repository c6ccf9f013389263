#pragma once

#include <string>

#include "json.hpp"

#include "qgerbe/atlas.hpp"
#include "qgerbe/gerbe.hpp"
#include "qgerbe/hgroupoid.hpp"

// JSON encodings of the library types. Decoders throw Error(ParseError) on
// malformed input and let domain errors (MalformedCover, ...) propagate.
//
//   Quat               [w, x, y, z]
//   Matrix4            16 numbers, row-major
//   ConformalElement   {"p": Quat, "q": Quat, "lambda": number}
//   GroupoidMorphism   {"p": Quat, "source_versor": Quat}
//   Bimodule           {"Li", "Lj", "Lk", "Ri", "Rj", "Rk": Matrix4}
//   Nerve              {"charts": n,
//                       "pairs":   [{"ij":   [i,j],     "ids": [...], "points": [Quat...]}],
//                       "triples": [{"ijk":  [i,j,k],   "ids": [...]}],
//                       "quads":   [{"ijkl": [i,j,k,l], "ids": [...]}]}
//   Cocycle            Nerve + {"fields": [{"overlap": [..], "kind": "R"|"Q", "values": [Quat...]}]}
//                      (rotations are written as their versors)
//   Coboundary         {"fields": [...]} with R fields on charts [i] and Q fields on pairs
//   Atlas              {"charts": n, "pairs": [{"ij", "chain": [{"op", "arg"}], "ids", "points"}],
//                       "triples": [{"ijk", "ids"}], "quads": [{"ijkl", "ids"}]}
//   Report             {"pass", "vacuous", "tol", "worst": {"simplex", "point_index", "residual"} | null,
//                       "per_simplex": [{"simplex", "kind", "max_residual", "point_index", "max_log_scale"}]}

namespace qgerbe::io {

using nlohmann::json;

json to_json(const Quatd& q);
Quatd quat_from_json(const json& j);

json matrix_to_json(const Matrix4d& m);
Matrix4d matrix_from_json(const json& j);

json to_json(const ConformalElementd& c);
ConformalElementd conformal_from_json(const json& j);

json to_json(const GroupoidMorphismd& m);
GroupoidMorphismd morphism_from_json(const json& j);

json to_json(const Bimoduled& b);
Bimoduled bimodule_from_json(const json& j);

json to_json(const Nerve& n);
Nerve nerve_from_json(const json& j);

json to_json(const BitorsorCocycle& c);
BitorsorCocycle cocycle_from_json(const json& j);

json to_json(const CoboundaryData& cob);
CoboundaryData coboundary_from_json(const json& j, const Nerve& nerve);

json to_json(const Atlas& a);
Atlas atlas_from_json(const json& j);

json to_json(const CheckReport& r);

/// Human-readable description of every schema above, as JSON.
json schemas();

/// Reads and parses a JSON file; throws ParseError.
json read_file(const std::string& path);

} // namespace qgerbe::io
