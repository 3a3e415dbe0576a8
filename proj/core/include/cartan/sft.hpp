#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cartan/jets.hpp"
#include "cartan/realization.hpp"

namespace cartan {

/// A chart-presented Lie groupoid: total chart, base chart, source/target
/// and unit maps, a frame of the Lie algebroid given by the unit-point
/// vertical coordinate directions, right-invariant extensions of the frame,
/// and (when available) a parametrized composable chart with the
/// multiplication map.
struct GroupoidChart {
  ChartPtr total;
  ChartPtr base;
  RatMap src, tgt;   // total -> base
  RatMap unit;       // base -> total
  std::vector<std::size_t> vertical;  // total-var indices spanning ker ds at units
  std::vector<VField> rinv;           // right-invariant frame extensions

  struct Composable {
    ChartPtr chart;      // (left fiber vars, then all right-factor vars)
    RatMap mult;         // -> total
    RatMap pr_left;      // -> total
    RatMap pr_right;     // -> total
    /// Action of the left factor on the coefficient values of the Cartan
    /// form, as a matrix over the composable chart (identity for a trivial
    /// action).
    std::optional<MatRF> action;
  };
  std::optional<Composable> comp;

  GroupoidChart(ChartPtr t, ChartPtr b, RatMap s, RatMap tg, RatMap u)
      : total(std::move(t)), base(std::move(b)), src(std::move(s)),
        tgt(std::move(tg)), unit(std::move(u)) {}

  /// Substitutes the unit section: a function on the total chart evaluated
  /// along units, as a function on the base.
  RatFn at_units(const RatFn& f) const { return unit.pull(f); }
};

/// The jet groupoid J^k R^n as a groupoid chart (k >= 0), with
/// multiplication parametrized by symbolic jet composition.
GroupoidChart jet_groupoid(unsigned n, unsigned k);

/// A jet subgroupoid presented by a defining-equation embedding
/// (reduced chart -> full J^k R^n chart). The embedding must carry each
/// reduced variable in a coordinate slot and its image must contain the
/// units and be closed under composition and inverse (verified for the
/// generated multiplication map).
GroupoidChart jet_subgroupoid(unsigned n, unsigned k, const RatMap& embedding,
                              const ChartPtr& base);

/// Right-invariant extension of the frame element with vertical index
/// `which` (index into GroupoidChart::vertical).
VField right_invariant_field(const GroupoidChart& G, std::size_t which);

/// Structure functions and anchor from brackets of right-invariant
/// extensions at units; a true Lie algebroid.
FramedAlgebroid algebroid_from_groupoid(const GroupoidChart& G);

/// The Cartan form components of a jet groupoid chart, restricted along the
/// embedding when present. Components are indexed like the vertical frame
/// of the level-(k-1) full jet chart.
std::vector<DForm> groupoid_cartan_form(const GroupoidChart& G, unsigned n, unsigned k,
                                        const std::optional<RatMap>& embedding);

struct SpencerTable {
  // D_{d/dx_b}(a_c) in E-frame coordinates: [b][c] -> VecRF (length dimE)
  std::vector<std::vector<VecRF>> D;
  bool exact = true;  // omega([X^, a~]) really is a target pullback
};

/// The Spencer operator from the Cartan form: D_X(a) = omega([X^, a~]) with
/// X^ the omega-horizontal target lift of X.
SpencerTable spencer_from_cartanform(const GroupoidChart& G,
                                     const std::vector<DForm>& omega);

struct LpgReport {
  bool surjective = false;        // omega pointwise surjective (generic)
  bool transversal = false;       // C_omega + ker ds = TG
  bool kernel_equality = false;   // C_omega  ker dt = C_omega  ker ds
  bool kernel_involutive = false; // Frobenius of C_omega  ker ds
  bool standard = false;          // symbol map injective (generic rank)
  std::optional<bool> multiplicative;  // residual == 0, when comp supplied
  bool lie_pfaffian() const {
    return surjective && transversal && kernel_equality && kernel_involutive;
  }
};

LpgReport lpg_axiom_check(const GroupoidChart& G, const std::vector<DForm>& omega);

/// Everything produced by the Second-Fundamental-Theorem pipeline on a
/// jet-groupoid chart.
struct SftResult {
  GroupoidChart level_k;
  GroupoidChart level_km1;
  std::vector<DForm> omega;       // Cartan form on the level-k chart
  FramedAlgebroid A_alg;          // Lie algebroid at level k
  FramedAlgebroid E_alg;          // Lie algebroid at level k-1
  MatRF l;                        // omega restricted to A: dimE x dimA
  SpencerTable D;
  AlmostCartanAlgebroid data;     // on C = TM + E in the user frame
  RealizationData realization;    // with pi solved (canonical member)
  PiSolution pi_solution;
  CartanDataCertificate certificate;
  LpgReport lpg;
};

struct SftInput {
  unsigned n = 0, k = 1;
  ChartPtr base;                       // n variables, with nonvanishing decls
  std::optional<RatMap> embedding;     // reduced level-k chart -> full chart
  MatRF frame;                         // r x (n + dimE) over base
  std::optional<MatRF> xi;             // dimA x dimE splitting (default: any)
  std::optional<std::vector<VecRF>>
      sigma_frame;                     // ker l basis in A coords (default: computed)
};

SftResult sft_pipeline(const SftInput& in);

/// Builds C = TM + E with bracket
///   [(X,a),(Y,b)] = ([X,Y], c(a,b) + nabla_X b - nabla_Y a),
/// nabla_X a = D_X(xi a) and c the torsion of nabla, then rewrites the
/// structure in the user frame together with the symbol action
/// T(X, a) = (0, dT(rho(a) - X)), dT(X) = -D_X(T).
AlmostCartanAlgebroid build_cartan_algebroid(
    const ChartPtr& base, const FramedAlgebroid& A_alg, const FramedAlgebroid& E_alg,
    const MatRF& l, const SpencerTable& D, const MatRF& xi,
    const std::vector<VecRF>& sigma_frame, const MatRF& frame);

}  // namespace cartan
