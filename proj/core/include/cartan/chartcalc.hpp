#pragma once

#include <map>
#include <string>
#include <vector>

#include "cartan/linalg.hpp"
#include "cartan/ratfn.hpp"

namespace cartan {

/// Strictly increasing tuple of variable indices.
using IdxTuple = std::vector<std::uint32_t>;

/// Differential form of fixed degree with RatFn coefficients, stored
/// sparsely over increasing index tuples. Degree-0 forms hold a single
/// coefficient at the empty tuple.
class DForm {
 public:
  DForm(ChartPtr chart, unsigned degree);
  static DForm function(const RatFn& f);
  /// d(x_i), degree 1.
  static DForm d_var(const ChartPtr& chart, std::size_t index);

  const ChartPtr& chart() const { return chart_; }
  unsigned degree() const { return degree_; }
  bool is_zero() const { return t_.empty(); }
  const std::map<IdxTuple, RatFn>& terms() const { return t_; }

  /// Accumulates c on the (not necessarily sorted, possibly repeating)
  /// tuple, with the sign of the sorting permutation.
  void add_term(IdxTuple idx, const RatFn& c);
  RatFn coeff(const IdxTuple& idx) const;

  DForm operator+(const DForm& o) const;
  DForm operator-(const DForm& o) const;
  DForm operator-() const;
  DForm operator*(const RatFn& f) const;  // scalar multiple

  bool eq(const DForm& o) const;

  std::string str() const;

 private:
  ChartPtr chart_;
  unsigned degree_;
  std::map<IdxTuple, RatFn> t_;
};

/// Graded-commutative wedge product.
DForm wedge(const DForm& a, const DForm& b);

/// Exterior derivative; satisfies d(d(a)) = 0 and the graded Leibniz rule.
DForm dext(const DForm& a);

/// Vector field with one RatFn coefficient per chart variable.
class VField {
 public:
  explicit VField(ChartPtr chart);
  VField(ChartPtr chart, VecRF coeffs);
  static VField coordinate(const ChartPtr& chart, std::size_t index);

  const ChartPtr& chart() const { return chart_; }
  const VecRF& coeffs() const { return c_; }
  RatFn& operator[](std::size_t i) { return c_[i]; }
  const RatFn& operator[](std::size_t i) const { return c_[i]; }

  VField operator+(const VField& o) const;
  VField operator-(const VField& o) const;
  VField operator*(const RatFn& f) const;
  bool eq(const VField& o) const;
  bool is_zero() const;

  /// Derivation applied to a function: X(f).
  RatFn apply(const RatFn& f) const;

  std::string str() const;

 private:
  ChartPtr chart_;
  VecRF c_;
};

/// Lie bracket of vector fields, [X,Y]^i = X(Y^i) - Y(X^i).
VField lie_bracket(const VField& X, const VField& Y);

/// Contraction of a degree-1 form with a vector field.
RatFn pair(const DForm& a, const VField& X);

/// Interior product of a vector field into a form (degree drops by 1).
DForm interior(const VField& X, const DForm& a);

/// Rational map between charts: one component per target variable,
/// expressed in the source variables.
class RatMap {
 public:
  RatMap(ChartPtr source, ChartPtr target, VecRF components);
  static RatMap identity(const ChartPtr& chart);

  const ChartPtr& source() const { return source_; }
  const ChartPtr& target() const { return target_; }
  const VecRF& components() const { return comp_; }

  /// this after `first`: (this o first), a map source(first) -> target(this).
  RatMap after(const RatMap& first) const;

  /// Substitutes the components into f (a function on the target chart).
  RatFn pull(const RatFn& f) const;

  /// Checks this o inv == id and inv o this == id identically.
  bool is_inverse(const RatMap& inv) const;

  /// Jacobian matrix d(component i)/d(source var j).
  MatRF jacobian() const;

  std::string str() const;

 private:
  ChartPtr source_, target_;
  VecRF comp_;
};

/// Pullback of a form along a rational map; an algebra morphism commuting
/// with dext.
DForm pullback(const RatMap& F, const DForm& a);

/// Pushforward of a vector field along F, using a supplied rational
/// inverse. The inverse is verified identically before use.
VField pushforward(const RatMap& F, const RatMap& Finv, const VField& X);

/// Whether X (on the source) and Y (on the target) are F-related:
/// dF(X) = Y o F identically. Needs no inverse.
bool is_related(const RatMap& F, const VField& X, const VField& Y);

struct CoframeReport {
  bool ok = false;
  RatFn witness;  // the determinant of the coefficient matrix
  CoframeReport() : witness(ChartPtr{}) {}
};

/// Decides whether `forms` (count = chart dimension, all degree 1) is a
/// coframe; the determinant witness is returned either way.
CoframeReport coframe_check(const std::vector<DForm>& forms);

struct FrobeniusReport {
  bool involutive = false;
  std::size_t generic_rank = 0;
  Poly witness;  // rank locus witness
  std::optional<std::pair<std::size_t, std::size_t>> counterexample;
  FrobeniusReport() : witness(ChartPtr{}) {}
};

/// Involutivity of the distribution spanned by `span` over the fraction
/// field: every bracket of spanning fields must stay in the generic span.
FrobeniusReport frobenius_involutive(const std::vector<VField>& span);

}  // namespace cartan
