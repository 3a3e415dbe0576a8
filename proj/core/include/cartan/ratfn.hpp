#pragma once

#include <string>
#include <vector>

#include "cartan/poly.hpp"

namespace cartan {

/// Element of the field of rational functions over a chart, stored as
/// num/den in canonical form: den is a nonzero polynomial with coprime
/// integer coefficients and positive leading (graded-lex) coefficient.
/// No polynomial gcd is taken; equality is decided by cross-multiplication.
class RatFn {
 public:
  explicit RatFn(ChartPtr chart) : num_(chart), den_(Poly::constant(chart, 1)) {}
  explicit RatFn(Poly num) : num_(std::move(num)), den_(Poly::constant(num_.chart(), 1)) {}
  RatFn(Poly num, Poly den);

  static RatFn constant(ChartPtr chart, const Rat& c);
  static RatFn variable(ChartPtr chart, std::size_t index);
  static RatFn zero(ChartPtr chart) { return RatFn(std::move(chart)); }
  static RatFn one(ChartPtr chart) { return constant(std::move(chart), 1); }

  const ChartPtr& chart() const { return num_.chart(); }
  const Poly& num() const { return num_; }
  const Poly& den() const { return den_; }

  bool is_zero() const { return num_.is_zero(); }
  bool is_constant() const { return num_.is_constant() && den_.is_constant(); }
  Rat constant_value() const;

  RatFn operator-() const;
  RatFn operator+(const RatFn& o) const;
  RatFn operator-(const RatFn& o) const;
  RatFn operator*(const RatFn& o) const;
  RatFn operator/(const RatFn& o) const;
  RatFn& operator+=(const RatFn& o) { return *this = *this + o; }
  RatFn& operator-=(const RatFn& o) { return *this = *this - o; }
  RatFn& operator*=(const RatFn& o) { return *this = *this * o; }
  RatFn pow(long e) const;
  RatFn inverse() const;

  RatFn operator*(const Rat& c) const;

  /// Mathematical equality by cross-multiplication.
  bool eq(const RatFn& o) const;
  bool operator==(const RatFn& o) const { return eq(o); }

  /// Structural equality of the stored representatives.
  bool identical(const RatFn& o) const {
    return num_.identical(o.num_) && den_.identical(o.den_);
  }

  RatFn deriv(std::size_t var) const;
  RatFn deriv(const std::string& var) const;

  /// Exact evaluation; errors when the denominator vanishes at the point or
  /// the point violates a chart nonvanishing constraint.
  Rat eval(const std::vector<Rat>& point) const;

  /// Substitutes `values[i]` (all on one common chart) for variable i.
  /// Errors when the denominator substitutes to the identically-zero
  /// function.
  RatFn subst(const std::vector<RatFn>& values) const;

  std::string str() const;

 private:
  void canon();
  Poly num_, den_;
};

inline RatFn operator*(const Rat& c, const RatFn& f) { return f * c; }

/// Parses the expression grammar: integers, rational literals p/q, chart
/// variables, + - * / ^ with integer exponents, parentheses. Returns the
/// denoted rational function in canonical form.
RatFn parse_ratfn(const std::string& text, const ChartPtr& chart);

/// Parses an expression that must be polynomial (used for nonvanishing
/// declarations).
Poly parse_poly(const std::string& text, const ChartPtr& chart);

}  // namespace cartan
