#pragma once

#include <optional>
#include <vector>

#include "cartan/ratfn.hpp"

namespace cartan {

using VecRF = std::vector<RatFn>;
using MatRF = std::vector<VecRF>;

MatRF mat_zero(const ChartPtr& chart, std::size_t rows, std::size_t cols);
MatRF mat_identity(const ChartPtr& chart, std::size_t n);

/// Result of solving A x = b over the fraction field.
///
/// SAT: `particular` is one exact solution (free variables set to zero) and
/// `nullspace` a basis of the homogeneous solutions. UNSAT: `unsat_row`
/// holds a row of the eliminated augmented system of the form
/// (0 ... 0 | nonzero).  `witness` is a polynomial whose non-vanishing
/// certifies the computed rank (the pivoting minor times the cleared row
/// denominators).
struct LinearSolution {
  bool sat = false;
  VecRF particular;
  std::vector<VecRF> nullspace;
  std::size_t rank = 0;
  Poly witness;
  std::optional<VecRF> unsat_row;  // length cols+1, last entry the rhs

  LinearSolution() : witness(ChartPtr{}) {}
  explicit LinearSolution(const ChartPtr& c) : witness(Poly::constant(c, 1)) {}
};

/// Exact solution of A x = b by fraction-free (Bareiss) elimination.
/// Pivots are chosen with minimal total degree, ties broken by position.
LinearSolution solve_linear(const MatRF& A, const VecRF& b);

/// Variant that tolerates a system with zero rows (every unknown free).
LinearSolution solve_linear(const MatRF& A, const VecRF& b,
                            const ChartPtr& chart, std::size_t cols);

/// Homogeneous case helpers.
std::vector<VecRF> nullspace(const MatRF& A);
std::size_t rank(const MatRF& A);
std::size_t rank(const MatRF& A, Poly& witness);

/// Exact determinant of a square matrix.
RatFn det(const MatRF& A);

/// Exact inverse; errors when the matrix is singular over the fraction
/// field.
MatRF inverse(const MatRF& A);

/// Decides whether v lies in the row span of `span` over the fraction
/// field; when it does and `coeffs` is non-null, stores coordinates.
bool in_span(const std::vector<VecRF>& span, const VecRF& v,
             VecRF* coeffs = nullptr);

MatRF mat_mul(const MatRF& A, const MatRF& B);
VecRF mat_apply(const MatRF& A, const VecRF& x);

}  // namespace cartan
