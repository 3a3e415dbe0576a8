#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <string>

namespace cartan {

using Int = boost::multiprecision::cpp_int;

/// Exact rational number. Kept in lowest terms with positive denominator
/// by the backend.
using Rat = boost::multiprecision::cpp_rational;

inline Int rat_num(const Rat& q) { return boost::multiprecision::numerator(q); }
inline Int rat_den(const Rat& q) { return boost::multiprecision::denominator(q); }

/// Prints as "p" or "p/q".
inline std::string rat_str(const Rat& q) {
  Int n = rat_num(q), d = rat_den(q);
  if (d == 1) return n.str();
  return n.str() + "/" + d.str();
}

inline Int int_factorial(unsigned n) {
  Int r = 1;
  for (unsigned i = 2; i <= n; ++i) r *= i;
  return r;
}

}  // namespace cartan
