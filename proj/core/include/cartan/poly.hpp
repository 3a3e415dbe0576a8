#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cartan/chart.hpp"
#include "cartan/rat.hpp"

namespace cartan {

/// Exponent vector; length equals the chart dimension.
using Mono = std::vector<std::uint32_t>;

inline unsigned mono_degree(const Mono& m) {
  unsigned d = 0;
  for (auto e : m) d += e;
  return d;
}

/// Graded lexicographic order over the chart's declared variable order,
/// ascending (the leading monomial of a map is its last entry).
struct GrlexLess {
  bool operator()(const Mono& a, const Mono& b) const {
    unsigned da = mono_degree(a), db = mono_degree(b);
    if (da != db) return da < db;
    // same degree: lexicographic with earlier variables more significant;
    // "greater" means the earlier variable carries the higher exponent.
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i] != b[i]) return a[i] < b[i];
    return false;
  }
};

/// Sparse multivariate polynomial with exact rational coefficients on a
/// chart. No zero coefficient is ever stored.
class Poly {
 public:
  using Terms = std::map<Mono, Rat, GrlexLess>;

  explicit Poly(ChartPtr chart) : chart_(std::move(chart)) {}
  static Poly constant(ChartPtr chart, const Rat& c);
  static Poly variable(ChartPtr chart, std::size_t index);
  static Poly monomial(ChartPtr chart, const Mono& m, const Rat& c);

  const ChartPtr& chart() const { return chart_; }
  const Terms& terms() const { return t_; }
  bool is_zero() const { return t_.empty(); }
  bool is_constant() const;
  /// Constant term (the value if is_constant()).
  Rat constant_value() const;

  Poly operator-() const;
  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly operator*(const Poly& o) const;
  Poly operator*(const Rat& c) const;
  Poly pow(unsigned e) const;

  void add_term(const Mono& m, const Rat& c);

  Poly deriv(std::size_t var) const;
  Rat eval(const std::vector<Rat>& point) const;

  unsigned total_degree() const;  // 0 for the zero polynomial
  const Mono& leading_mono() const;
  const Rat& leading_coeff() const;

  /// Positive rational c such that (1/c)*this has coprime integer
  /// coefficients; 0 for the zero polynomial. Sign is not included.
  Rat content() const;
  /// Componentwise minimum of all exponent vectors (zero vector if empty).
  Mono min_exponents() const;
  /// Divides by the monomial x^m; every term must be divisible.
  Poly shift_down(const Mono& m) const;

  /// Exact division; returns false when not exactly divisible.
  static bool try_divide_exact(const Poly& a, const Poly& b, Poly& quot);

  /// Structural equality (same terms).
  bool identical(const Poly& o) const { return t_ == o.t_; }

  /// Canonical printing: terms in descending graded-lex order, rational
  /// coefficients as p/q, `*` between factors and `^` for powers.
  std::string str() const;

 private:
  ChartPtr chart_;
  Terms t_;
};

inline Poly operator*(const Rat& c, const Poly& p) { return p * c; }

}  // namespace cartan
