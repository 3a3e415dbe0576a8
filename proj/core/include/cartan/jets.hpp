#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cartan/chartcalc.hpp"

namespace cartan {

/// All multi-indices 0 <= |alpha| <= k on n variables, graded-lex ascending
/// (the zero index first).
struct MultiIndexSet {
  unsigned n = 0, k = 0;
  std::vector<Mono> list;
  std::map<Mono, std::size_t, GrlexLess> pos;

  static MultiIndexSet make(unsigned n, unsigned k);
  std::size_t index(const Mono& m) const;
  std::size_t count() const { return list.size(); }
  bool contains(const Mono& m) const { return pos.count(m) > 0; }
};

Rat mono_factorial(const Mono& m);

// --- scalar abstraction: jet arithmetic is generic over Rat and RatFn ----

inline Rat f_zero(const Rat&) { return Rat(0); }
inline Rat f_one(const Rat&) { return Rat(1); }
inline Rat f_from_rat(const Rat&, const Rat& q) { return q; }
inline bool f_is_zero(const Rat& a) { return a == 0; }
inline bool f_eq(const Rat& a, const Rat& b) { return a == b; }

inline RatFn f_zero(const RatFn& p) { return RatFn::zero(p.chart()); }
inline RatFn f_one(const RatFn& p) { return RatFn::one(p.chart()); }
inline RatFn f_from_rat(const RatFn& p, const Rat& q) {
  return RatFn::constant(p.chart(), q);
}
inline bool f_is_zero(const RatFn& a) { return a.is_zero(); }
inline bool f_eq(const RatFn& a, const RatFn& b) { return a.eq(b); }

/// Truncated derivative table of a locally defined diffeomorphism of R^n:
/// source point and entries u^i_alpha = d^alpha phi^i for 0 <= |alpha| <= k
/// (u^i_0 the target coordinates). Entries are partial derivatives, not
/// Taylor coefficients. Scalar type F is Rat (a concrete jet) or RatFn
/// (a symbolic jet whose entries are functions on some chart).
template <class F>
struct Jet {
  unsigned n = 0, k = 0;
  std::vector<F> source;                // n entries
  std::vector<std::vector<F>> table;    // [i][pos(alpha)], all |alpha| <= k

  const F& entry(std::size_t i, std::size_t apos) const { return table[i][apos]; }
  std::vector<F> target() const {
    std::vector<F> t;
    for (unsigned i = 0; i < n; ++i) t.push_back(table[i][0]);
    return t;
  }
};

using JetPoint = Jet<Rat>;
using JetFn = Jet<RatFn>;

template <class F>
Jet<F> jet_identity(unsigned n, unsigned k, const std::vector<F>& at);

/// Truncated composition g o f; requires same n, same k, and
/// source(g) == target(f).
template <class F>
Jet<F> jet_compose(const Jet<F>& g, const Jet<F>& f);

/// Groupoid inverse; requires a nonsingular Jacobian block.
template <class F>
Jet<F> jet_inverse(const Jet<F>& j);

/// Truncation to a lower order.
template <class F>
Jet<F> jet_project(const Jet<F>& j, unsigned k);

template <class F>
bool jet_eq(const Jet<F>& a, const Jet<F>& b);

/// Exact k-jet of a rational map at a rational point.
JetPoint jet_of_map(const RatMap& F, const std::vector<Rat>& x0, unsigned k);

/// Symbolic k-jet of a rational map at the generic point of its source
/// chart; entries are RatFns in the source variables.
JetFn jet_of_map_symbolic(const RatMap& F, unsigned k);

// --- the symbolic chart of J^k R^n ---------------------------------------

/// Chart of the k-th jet groupoid of R^n. Variables: the n source
/// coordinates, then one variable per (target index i, multi-index alpha)
/// in graded-lex order of alpha (|alpha| = 0 gives the target coordinates).
/// The Jacobian-block determinant is declared nonvanishing.
struct JetChartInfo {
  unsigned n = 0, k = 0;
  ChartPtr chart;
  MultiIndexSet midx;

  std::size_t xvar(unsigned a) const { return a; }
  std::size_t uvar(unsigned i, std::size_t apos) const {
    return n + apos * n + i;
  }
  /// Frame index pairs (i, alpha), |alpha| <= k-1, in graded-lex order of
  /// alpha with i inner.
  std::vector<std::pair<unsigned, Mono>> frame_pairs() const;

  /// Reads the generic jet off the chart variables (order k).
  JetFn generic_jet() const;
  /// The unit (identity-jet) section, base chart -> jet chart.
  RatMap unit_section(const ChartPtr& base) const;
  ChartPtr base_chart() const;
};

JetChartInfo jet_chart(unsigned n, unsigned k);

/// The Cartan form of J^k R^n, one degree-1 component per frame pair
/// (i,alpha) with |alpha| <= k-1: first the vertical corrections
/// du^i_alpha - u^i_{alpha+e_a} dx^a, then the right-translation
/// differential obtained by differentiating a symbolic composition against
/// the inverse jet in indeterminate coefficients.
struct CartanFormData {
  JetChartInfo jc;
  std::vector<std::pair<unsigned, Mono>> frame;
  std::vector<DForm> components;  // aligned with `frame`
};

CartanFormData cartan_form_chart(unsigned n, unsigned k);

/// Restriction of a Cartan form along a defining-equation embedding
/// (reduced chart -> full jet chart): componentwise pullback.
std::vector<DForm> restrict_along(const std::vector<DForm>& comps, const RatMap& emb);

// --- jet sections ---------------------------------------------------------

/// Section of the jet bundle over a base chart: components b^i_alpha(x).
struct JetSection {
  ChartPtr base;
  unsigned n = 0, k = 0;
  MultiIndexSet midx;
  std::vector<std::vector<RatFn>> comp;  // [i][pos(alpha)]
};

JetSection jet_section(const ChartPtr& base, unsigned k,
                       const std::vector<std::vector<RatFn>>& comp);

/// The jet prolongation of an n-tuple of base functions.
JetSection prolong_section(const ChartPtr& base, unsigned k, const VecRF& order0);

/// defect^i_{alpha,a} = d_a b^i_alpha - b^i_{alpha+e_a}, |alpha| <= k-1;
/// identically zero iff the section is the prolongation of its order-0 part.
struct HolonomicDefect {
  MultiIndexSet midx;  // |alpha| <= k-1
  // [i][pos(alpha)][a]
  std::vector<std::vector<std::vector<RatFn>>> d;
  bool all_zero() const;
};

HolonomicDefect holonomic_defect(const JetSection& b);

/// Classical Spencer operator on sections of vector-field jets:
/// D_X(s)_alpha = X(s_alpha) - sum_a X^a s_{alpha+e_a}, |alpha| <= k-1.
JetSection spencer_D(const JetSection& s, const VField& X);

/// The prolongation to J^k of a pseudogroup element phi: the map sending
/// the jet coordinates of j to those of j . (j^k phi at s(j))^{-1}. The
/// required jet inversion is rational in the jet entries, so no global
/// rational inverse of phi is needed; when one is supplied it is verified
/// identically. With an embedding, the result is expressed in the reduced
/// coordinates and checked to preserve the embedded locus.
RatMap prolong_element(const RatMap& phi, unsigned k);
RatMap prolong_element(const RatMap& phi, unsigned k, const RatMap& embedding);
RatMap prolong_element(const RatMap& phi, const RatMap& phi_inv, unsigned k);
RatMap prolong_element(const RatMap& phi, const RatMap& phi_inv, unsigned k,
                       const RatMap& embedding);

/// For an embedding whose components include each reduced variable as a
/// plain coordinate of the full chart, returns for each reduced variable
/// the index of that full-chart coordinate.
std::vector<std::size_t> section_slots(const RatMap& embedding);

}  // namespace cartan
