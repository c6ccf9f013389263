#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "qgerbe/hgroupoid.hpp"
#include "qgerbe/nerve.hpp"

namespace qgerbe {

/**
 * A quaternionic bitorsor cocycle in trivialized components.
 *
 * `objects` holds, per pair (i, j), the rotation-valued twist alpha_ij of the
 * transition bitorsor E_ij. `morphisms` holds, per triple (i, j, k), the
 * quaternion p_ijk of psi_ijk : E_ij (x) E_jk -> E_ik. The component
 * identities checked are
 *
 *   triples:     delta(p_ijk) alpha_ij alpha_jk = alpha_ik
 *   quadruples:  p_ikl p_ijk = p_ijl alpha_ij[p_jkl]   (modulo R+)
 *
 * which are the two paths of the coherence square expanded with
 * (p, a) (x) (q, b) = (p a[q], a b) and q o p = q p.
 */
struct BitorsorCocycle {
  std::shared_ptr<const Nerve> nerve;
  std::map<Simplex, FieldR> objects;
  std::map<Simplex, FieldQ> morphisms;

  /// Throw MissingField if absent.
  const FieldR& object(const Simplex& pair) const;
  const FieldQ& morphism(const Simplex& triple) const;
};

/**
 * Data (M_i, nu_ij) relating a cocycle (alpha, p) to a cocycle (alpha', p'):
 *
 *   pairs:    delta(n_ij) alpha'_ij = m_i^-1 alpha_ij m_j
 *   triples:  n_ik p'_ijk = m_i^-1[p_ijk] n_ij alpha'_ij[n_jk]   (modulo R+)
 *
 * m_i is sampled on the chart overlap {i}, n_ij on the pair (i, j).
 */
struct CoboundaryData {
  std::map<int, FieldR> charts;
  std::map<Simplex, FieldQ> pairs;

  const FieldR& chart(int i) const;
  const FieldQ& pair(const Simplex& ij) const;
};

struct ResidualEntry {
  Simplex simplex;
  /// "object" (rotation level), "coherence" (quadruple square) or "morphism"
  /// (coboundary triple identity).
  std::string kind;
  double max_residual = 0;
  std::size_t point_index = 0;
  /// Largest |log|lhs| - log|rhs|| for quaternion identities; informational.
  double max_log_scale = 0;
};

struct CheckReport {
  bool pass = true;
  /// Nothing to check: the nerve has no triples.
  bool vacuous = false;
  double tol = 0;
  std::vector<ResidualEntry> per_simplex;

  /// Entry with the largest residual, if any.
  std::optional<ResidualEntry> worst() const;
};

/// Default tolerance for synthetic cocycle and coboundary checks.
inline constexpr double kCocycleTolerance = 1e-10;

/// Distance between a/|a| and b/|b|: the quaternion residual modulo R+.
double scale_free_residual(const Quatd& a, const Quatd& b);

/// Component-formula check of both cocycle identities; throws MissingField.
CheckReport check_cocycle(const BitorsorCocycle& c, double tol);

/**
 * The same two identities re-evaluated through GroupoidMorphism values with
 * tensor() and compose() only. Where a face fails at the object level the
 * composite is formed from the actual target of the first arrow.
 */
CheckReport groupoid_oracle_check(const BitorsorCocycle& c, double tol);

/// Throws MissingField, NerveMismatch.
CheckReport check_coboundary(const BitorsorCocycle& a, const BitorsorCocycle& b,
                             const CoboundaryData& cob, double tol);

/// The cocycle b related to a by cob; throws MissingField.
BitorsorCocycle apply_coboundary(const BitorsorCocycle& a, const CoboundaryData& cob);

/// alpha = id, p = 1 everywhere.
BitorsorCocycle trivial_cocycle(std::shared_ptr<const Nerve> nerve);

CoboundaryData identity_coboundary(const Nerve& nerve);

/// If cob relates a to b, the result relates b to a.
CoboundaryData inverse_coboundary(const Nerve& nerve, const CoboundaryData& cob);

/// If first relates a to b and second relates b to c, the result relates a to c.
CoboundaryData compose_coboundaries(const Nerve& nerve, const CoboundaryData& first,
                                    const CoboundaryData& second);

/// Random rotations m_i and random nonzero n_ij of varied scale; deterministic in seed.
CoboundaryData random_coboundary(const Nerve& nerve, std::uint64_t seed);

struct SyntheticCocycle {
  BitorsorCocycle cocycle;
  /// The coboundary relating the trivial cocycle to `cocycle`.
  CoboundaryData from_trivial;
};

/// The image of the trivial cocycle under random_coboundary(nerve, seed).
SyntheticCocycle synth_coboundary_cocycle(std::shared_ptr<const Nerve> nerve, std::uint64_t seed);

} // namespace qgerbe
