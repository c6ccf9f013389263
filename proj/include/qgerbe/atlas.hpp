#pragma once

#include <cstdint>
#include <map>
#include <string_view>
#include <vector>

#include "qgerbe/conformal.hpp"
#include "qgerbe/gerbe.hpp"
#include "qgerbe/nerve.hpp"

namespace qgerbe {

/// One primitive of a chart transition. `Linear` is a general real-linear map
/// and exists to build non-conformal counterexamples.
struct Step {
  enum class Op { LeftMul, RightMul, Translate, Invert, Linear };

  Op op = Op::Translate;
  Quatd arg;
  Matrix4d linear = Matrix4d::Identity();

  static Step left_mul(const Quatd& a);
  static Step right_mul(const Quatd& b);
  static Step translate(const Quatd& c);
  static Step invert();
  static Step linear_map(const Matrix4d& m);
};

std::string_view to_string(Step::Op op);
Step::Op parse_step_op(std::string_view name);

/// Steps evaluated left to right: the first step acts first.
struct TransitionMap {
  std::vector<Step> steps;

  /// This map followed by `next`.
  TransitionMap then(const TransitionMap& next) const;
};

/// Throws PoleHit when an Invert step meets (numerically) zero.
Quatd transition_eval(const TransitionMap& t, const Quatd& x);

enum class JacobianMode { Analytic, FiniteDifference };

std::string_view to_string(JacobianMode mode);
JacobianMode parse_jacobian_mode(std::string_view name);

/// Derivative of one step at y: v -> a v, v -> v b, Id, v -> -y^-1 v y^-1, M.
Matrix4d step_jacobian(const Step& step, const Quatd& y);

/// Central differences with step h; throws StepTooSmall, PoleHit.
Matrix4d finite_difference_jacobian(const TransitionMap& t, const Quatd& x, double h);

/**
 * Jacobian of t at x. Analytic mode multiplies per-step derivatives along the
 * orbit. Finite-difference mode uses central differences with
 * h = 1e-5 max(1, |x|) and switches to Richardson extrapolation when the
 * h and h/2 estimates disagree by more than 1e-6 relative.
 */
Matrix4d jacobian(const TransitionMap& t, const Quatd& x, JacobianMode mode);

/// Transition T_ij = psi_i o psi_j^-1 together with its samples, given in
/// chart j (source) coordinates.
struct AtlasPair {
  Simplex ij;
  TransitionMap map;
  std::vector<SampleId> ids;
  std::vector<Quatd> points;
};

struct AtlasSimplex {
  Simplex index;
  std::vector<SampleId> ids;
};

struct Atlas {
  int chart_count = 0;
  std::vector<AtlasPair> pairs;
  std::vector<AtlasSimplex> triples;
  std::vector<AtlasSimplex> quads;

  /// Throws NotAFace.
  const AtlasPair& pair(const Simplex& ij) const;
  bool has_pair(const Simplex& ij) const;

  /// Overlap combinatorics; pair points are reported in chart i coordinates.
  Nerve nerve() const;
};

struct AtlasCheck {
  /// max |T_ji(T_ij(x)) - x| / max(1, |x|) over pairs declared both ways.
  double inverse_residual = 0;
  /// max |T_ij(T_jk(x)) - T_ik(x)| / max(1, |x|) over triple samples, also
  /// covering the consistency of the stored sample coordinates.
  double triple_residual = 0;
};

AtlasCheck check_atlas(const Atlas& atlas);

struct JacobianSample {
  Matrix4d jacobian;
  double lambda = 1;
  /// jacobian = phi_matrix(x, y), |x| = |y| = sqrt(lambda).
  Quatd x, y;
  double conformal_residual = 0;
};

struct JacobianField {
  Simplex ij;
  std::vector<JacobianSample> samples;
};

/// Conformality tolerance used when factorizing Jacobians of each mode.
double factorization_tolerance(JacobianMode mode);

/**
 * Jacobian and factor pair at every sample of every pair. Signs of (x, y) are
 * aligned along a nearest-neighbour ordering of the samples so that x varies
 * continuously. Throws NotConformal naming the pair and sample.
 */
std::map<Simplex, JacobianField> factorize_transitions(const Atlas& atlas, JacobianMode mode);

/**
 * The tangent gerbe cocycle.
 *
 * alpha_ij = delta(y_ij x_ij). On a triple the chain rule gives the factor
 * pair (x_ij x_jk, y_jk y_ij) for J_ij J_jk; with g = y x its twist is
 * g_chain = y_jk y_ij x_ij x_jk and p_ijk = g_chain (g_ij g_jk)^-1. Both are
 * independent of the real gauge of each factor pair.
 */
BitorsorCocycle build_tangent_cocycle(const Atlas& atlas, JacobianMode mode);

struct AtlasParams {
  /// 0 selects the family default (s4_stereo 2, affine 3, others 4).
  int charts = 0;
  std::uint64_t seed = 1;
  int samples = 20;
  /// Nonzero appends a shear v -> (I + shear E_01) v to the first transition.
  double shear = 0;
};

/// s4_stereo, affine, torus_identity or synthetic_conformal; throws UnknownAtlas.
Atlas builtin_atlas(std::string_view name, const AtlasParams& params);

/// Appends a non-conformal shear to the transition of `ij`.
Atlas with_shear(Atlas atlas, const Simplex& ij, double amount);

} // namespace qgerbe
