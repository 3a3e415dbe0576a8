#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cartan/errors.hpp"

namespace cartan {

class Poly;
class Chart;
using ChartPtr = std::shared_ptr<const Chart>;

/// A coordinate chart: an ordered list of variable names, together with a
/// list of polynomials declared nonvanishing on the domain (e.g. y for the
/// chart of R^2 minus {y=0}). Charts are immutable after construction and
/// shared by pointer; values on two charts are compatible iff the variable
/// lists coincide.
class Chart {
 public:
  static ChartPtr make(std::vector<std::string> vars);
  /// `nonvanishing` entries are expression strings parsed on this chart;
  /// each must be a nonzero polynomial.
  static ChartPtr make(std::vector<std::string> vars,
                       const std::vector<std::string>& nonvanishing);
  /// Same, with already-built polynomials (internal use).
  static ChartPtr make_with(std::vector<std::string> vars,
                            std::vector<Poly> nonvanishing);

  std::size_t dim() const { return vars_.size(); }
  const std::vector<std::string>& vars() const { return vars_; }
  const std::string& var(std::size_t i) const { return vars_[i]; }
  std::optional<std::size_t> index_of(const std::string& name) const;
  std::size_t index_of_checked(const std::string& name) const;

  const std::vector<Poly>& nonvanishing() const { return nonvanishing_; }

  bool same_vars(const Chart& other) const { return vars_ == other.vars_; }

  ~Chart();

 private:
  Chart() = default;
  std::vector<std::string> vars_;
  std::vector<Poly> nonvanishing_;
};

inline bool compatible(const ChartPtr& a, const ChartPtr& b) {
  return a == b || (a && b && a->same_vars(*b));
}

inline void require_compatible(const ChartPtr& a, const ChartPtr& b,
                               const char* what) {
  if (!compatible(a, b))
    throw DimensionError(std::string("chart mismatch in ") + what);
}

}  // namespace cartan
