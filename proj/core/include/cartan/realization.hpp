#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cartan/algebroid.hpp"

namespace cartan {

/// A candidate realization: total chart P whose first n coordinates are the
/// base coordinates (I is the projection onto them), the algebroid data
/// over the base, the frame forms omega_1..omega_r and, optionally, the
/// auxiliary forms pi_1..pi_p.
struct RealizationData {
  ChartPtr total;
  AlmostCartanAlgebroid data;
  std::vector<DForm> omega;
  std::optional<std::vector<DForm>> pi;

  RealizationData(ChartPtr t, AlmostCartanAlgebroid d, std::vector<DForm> om);

  std::size_t base_dim() const { return data.C.base()->dim(); }
  /// Pullback along I: substitutes total variable a for base variable a.
  RatFn pull_base(const RatFn& f) const;

  /// The rank x (r+p) coefficient matrix of (omega, pi) in d(total vars).
  MatRF coframe_matrix() const;

  /// Structure-equation residual 2-forms, one per frame index.
  std::vector<DForm> residuals() const;
};

struct RealizationReport {
  bool anchored = true;
  std::vector<std::size_t> anchored_failures;
  bool coframe = false;
  RatFn coframe_witness;
  bool equations = true;
  std::vector<std::pair<std::size_t, DForm>> residual_failures;
  bool pass() const { return anchored && coframe && equations; }
  RealizationReport() : coframe_witness(ChartPtr{}) {}
};

/// Verifies anchoredness, the coframe condition and every structure
/// equation exactly. Requires pi to be present.
RealizationReport check_realization(const RealizationData& R);

struct PiSolution {
  bool sat = false;
  std::vector<DForm> pi;           // canonical member (free coefficients zero)
  std::size_t family_dim = 0;      // dimension of the affine family
  std::vector<std::vector<DForm>> family_basis;  // modeled directions
  std::size_t sigma1_dim = 0;      // cross-check: generic rank of sigma^(1)
  bool coframe_ok = false;
};

/// Solves the structure equations for pi linearly over the function field.
/// The family dimension is cross-checked against dim sigma^(1).
PiSolution solve_pi(const RealizationData& R_without_pi);

struct DualFrame {
  std::vector<VField> X_frame;   // dual to (omega, pi): first r entries
  std::vector<VField> X_sigma;   // last p entries
  bool lemma_identities_ok = true;
  bool kernel_involutive = true;
};

/// Inverts the coframe matrix and verifies the bracket identities
/// Omega([X_a,X_b]) = I^*[a,b], Omega([X_a,X_S]) = I^*S(a),
/// Omega([X_S,X_T]) = 0, plus involutivity of ker Omega.
DualFrame dual_frame(const RealizationData& R);

struct SystaticDistribution {
  std::vector<VField> action_fields;   // X_u for the S0 basis, then X_S
  std::size_t s0_rank = 0;
  bool image_matches_preimage = false; // {X : Omega(X) in S0}
  bool involutive = false;
  bool annihilator_matches = false;    // span of a_i^{lambda j} omega_j
  bool pi_independent = true;          // X_u unchanged under another pi member
  SystaticBuild build;
  SystaticDistribution(SystaticBuild b) : build(std::move(b)) {}
};

SystaticDistribution systatic_distribution(const RealizationData& R);

/// Substitutes base-coordinate assignments, drops those coordinates and
/// their dI-forms, and restricts the algebroid to the slice.
RealizationData restrict_transversal(
    const RealizationData& R,
    const std::vector<std::pair<std::string, Rat>>& assignments);

/// phi preserves I and every omega_i (exactly). When an inverse is
/// supplied it is verified identically first.
bool check_symmetry(const RatMap& phi, const RealizationData& R);
bool check_symmetry(const RatMap& phi, const RatMap& phi_inv,
                    const RealizationData& R);

struct InvarianceReport {
  bool symmetry = false;
  bool all_fixed = false;
  std::vector<std::size_t> moved;  // indices into (X_u list, then X_S list)
};

/// Every systatic action field is phi-related to itself, d(phi)(X) = X o phi
/// (equivalently the pushforward fixes it).
InvarianceReport check_systatic_invariance(const RatMap& phi,
                                           const RealizationData& R);
InvarianceReport check_systatic_invariance(const RatMap& phi, const RatMap& phi_inv,
                                           const RealizationData& R);

struct PfaffianLift {
  ChartPtr doubled;               // (base, fiber, fiber')
  std::vector<std::size_t> e_frame;  // unanchored frame indices (E = ker rho)
  std::vector<DForm> theta;       // one component per E frame element
  bool horizontal = false;        // theta kills the diagonal systatic fields
  bool equivariant = false;       // infinitesimal basicness identity
  bool connection_flat = false;   // curvature of nabla_{(u,S)} = [u,.] - S(.)
};

/// Builds the Pfaffian groupoid form theta = s^*Omega - t^*Omega on
/// P x_N P and verifies that it is basic for the systatic action.
PfaffianLift pfaffian_lift(const RealizationData& R);

}  // namespace cartan
