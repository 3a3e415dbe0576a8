#include "cartan/linalg.hpp"

#include <algorithm>

#include "cartan/errors.hpp"

namespace cartan {

MatRF mat_zero(const ChartPtr& chart, std::size_t rows, std::size_t cols) {
  return MatRF(rows, VecRF(cols, RatFn::zero(chart)));
}

MatRF mat_identity(const ChartPtr& chart, std::size_t n) {
  MatRF m = mat_zero(chart, n, n);
  for (std::size_t i = 0; i < n; ++i) m[i][i] = RatFn::one(chart);
  return m;
}

namespace {

ChartPtr chart_of(const MatRF& A, const VecRF& b) {
  if (!A.empty() && !A[0].empty()) return A[0][0].chart();
  if (!b.empty()) return b[0].chart();
  throw DimensionError("empty linear system with no chart");
}

struct Eliminated {
  ChartPtr chart;
  std::vector<std::vector<Poly>> M;  // rows x (cols+1), augmented
  std::vector<std::size_t> pivot_cols;
  std::vector<std::size_t> pivot_rows;  // row index holding k-th pivot (post-swap order: k)
  Poly witness;
  std::size_t cols = 0;

  Eliminated(const ChartPtr& c) : chart(c), witness(Poly::constant(c, 1)) {}
};

// Clears denominators row-wise, then runs fraction-free Bareiss forward
// elimination with column scanning. Pivot choice within a column: minimal
// total degree, ties broken by smallest row index.
Eliminated eliminate(const MatRF& A, const VecRF& b) {
  const std::size_t rows = A.size();
  const std::size_t cols = rows ? A[0].size() : (b.empty() ? 0 : 0);
  for (const auto& r : A)
    if (r.size() != cols) throw DimensionError("ragged matrix");
  if (!b.empty() && b.size() != rows)
    throw DimensionError("rhs length != row count");

  ChartPtr chart = chart_of(A, b);
  Eliminated el(chart);
  el.cols = cols;

  el.M.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    // multiply the row by the product of its denominators
    Poly lcm = Poly::constant(chart, 1);
    for (std::size_t j = 0; j < cols; ++j) lcm = lcm * A[i][j].den();
    if (!b.empty()) lcm = lcm * b[i].den();
    std::vector<Poly> row;
    row.reserve(cols + 1);
    for (std::size_t j = 0; j <= cols; ++j) {
      const RatFn& e = (j < cols) ? A[i][j] : (b.empty() ? RatFn::zero(chart) : b[i]);
      if (j == cols && b.empty()) {
        row.push_back(Poly(chart));
        continue;
      }
      Poly q(chart);
      if (!Poly::try_divide_exact(lcm, e.den(), q))
        throw Error("internal: denominator does not divide row lcm");
      row.push_back(e.num() * q);
    }
    // keep entries small: strip shared rational content
    Rat cont(0);
    for (const auto& p : row) {
      Rat c = p.content();
      if (c == 0) continue;
      if (cont == 0)
        cont = c;
      else
        cont = Rat(boost::multiprecision::gcd(rat_num(cont), rat_num(c)),
                   boost::multiprecision::lcm(rat_den(cont), rat_den(c)));
      if (cont == 1) break;
    }
    if (cont != 0 && cont != 1) {
      Rat inv = Rat(1) / cont;
      for (auto& p : row) p = p * inv;
    }
    el.M.push_back(std::move(row));
    el.witness = el.witness * lcm;
  }

  Poly prev_pivot = Poly::constant(chart, 1);
  std::size_t rank = 0;
  for (std::size_t c = 0; c < cols && rank < rows; ++c) {
    // pick pivot
    std::size_t best = rows;
    unsigned best_deg = 0;
    for (std::size_t r = rank; r < rows; ++r) {
      if (el.M[r][c].is_zero()) continue;
      unsigned d = el.M[r][c].total_degree();
      if (best == rows || d < best_deg) {
        best = r;
        best_deg = d;
      }
    }
    if (best == rows) continue;  // free column
    std::swap(el.M[rank], el.M[best]);
    const Poly pivot = el.M[rank][c];
    for (std::size_t r = rank + 1; r < rows; ++r) {
      for (std::size_t j = 0; j <= cols; ++j) {
        if (j == c) continue;
        Poly t = el.M[r][j] * pivot - el.M[r][c] * el.M[rank][j];
        Poly q(chart);
        if (!Poly::try_divide_exact(t, prev_pivot, q))
          throw Error("internal: Bareiss division failed");
        el.M[r][j] = std::move(q);
      }
      el.M[r][c] = Poly(chart);
    }
    el.pivot_cols.push_back(c);
    el.pivot_rows.push_back(rank);
    prev_pivot = pivot;
    ++rank;
  }
  el.witness = el.witness * prev_pivot;
  return el;
}

}  // namespace

LinearSolution solve_linear(const MatRF& A, const VecRF& b) {
  ChartPtr chart = chart_of(A, b);
  const std::size_t rows = A.size();
  const std::size_t cols = rows ? A[0].size() : 0;
  Eliminated el = eliminate(A, b);
  LinearSolution out(chart);
  out.rank = el.pivot_cols.size();
  out.witness = el.witness;

  // inconsistent row: all-zero coefficients, nonzero rhs
  for (std::size_t r = out.rank; r < rows; ++r) {
    bool zero_coeffs = true;
    for (std::size_t j = 0; j < cols; ++j)
      if (!el.M[r][j].is_zero()) {
        zero_coeffs = false;
        break;
      }
    if (zero_coeffs && !el.M[r][cols].is_zero()) {
      out.sat = false;
      VecRF row;
      row.reserve(cols + 1);
      for (std::size_t j = 0; j <= cols; ++j) row.emplace_back(el.M[r][j]);
      out.unsat_row = std::move(row);
      return out;
    }
  }
  out.sat = true;

  std::vector<bool> is_pivot(cols, false);
  for (auto c : el.pivot_cols) is_pivot[c] = true;

  auto back_substitute = [&](std::size_t free_col, bool rhs) {
    // one solution with the given free column set to 1 (others 0);
    // rhs=true solves against the b column instead.
    VecRF x(cols, RatFn::zero(chart));
    if (free_col < cols) x[free_col] = RatFn::one(chart);
    for (std::size_t k = el.pivot_cols.size(); k-- > 0;) {
      std::size_t pc = el.pivot_cols[k];
      RatFn acc = rhs ? RatFn(el.M[k][cols]) : RatFn::zero(chart);
      for (std::size_t j = pc + 1; j < cols; ++j) {
        if (el.M[k][j].is_zero() || x[j].is_zero()) continue;
        acc = acc - RatFn(el.M[k][j]) * x[j];
      }
      x[pc] = acc / RatFn(el.M[k][pc]);
    }
    return x;
  };

  out.particular = back_substitute(cols, true);
  for (std::size_t c = 0; c < cols; ++c)
    if (!is_pivot[c]) out.nullspace.push_back(back_substitute(c, false));
  return out;
}

LinearSolution solve_linear(const MatRF& A, const VecRF& b,
                            const ChartPtr& chart, std::size_t cols) {
  if (!A.empty()) return solve_linear(A, b);
  LinearSolution out(chart);
  out.sat = true;
  out.rank = 0;
  out.particular = VecRF(cols, RatFn::zero(chart));
  for (std::size_t c = 0; c < cols; ++c) {
    VecRF v(cols, RatFn::zero(chart));
    v[c] = RatFn::one(chart);
    out.nullspace.push_back(std::move(v));
  }
  return out;
}

std::vector<VecRF> nullspace(const MatRF& A) {
  if (A.empty()) return {};
  VecRF b(A.size(), RatFn::zero(A[0].empty() ? ChartPtr{} : A[0][0].chart()));
  return solve_linear(A, b).nullspace;
}

std::size_t rank(const MatRF& A) {
  Poly w{ChartPtr{}};
  return rank(A, w);
}

std::size_t rank(const MatRF& A, Poly& witness) {
  if (A.empty() || A[0].empty()) {
    return 0;
  }
  Eliminated el = eliminate(A, VecRF{});
  witness = el.witness;
  return el.pivot_cols.size();
}

RatFn det(const MatRF& A) {
  const std::size_t n = A.size();
  if (n == 0) throw DimensionError("det of empty matrix");
  for (const auto& r : A)
    if (r.size() != n) throw DimensionError("det of non-square matrix");
  ChartPtr chart = A[0][0].chart();

  // Bareiss on the cleared matrix; det = last pivot * sign / (row scalings)
  std::vector<std::vector<Poly>> M;
  RatFn scaling = RatFn::one(chart);
  for (std::size_t i = 0; i < n; ++i) {
    Poly lcm = Poly::constant(chart, 1);
    for (std::size_t j = 0; j < n; ++j) lcm = lcm * A[i][j].den();
    std::vector<Poly> row;
    for (std::size_t j = 0; j < n; ++j) {
      Poly q(chart);
      if (!Poly::try_divide_exact(lcm, A[i][j].den(), q))
        throw Error("internal: det row clearing failed");
      row.push_back(A[i][j].num() * q);
    }
    M.push_back(std::move(row));
    scaling = scaling * RatFn(lcm);
  }
  Poly prev = Poly::constant(chart, 1);
  int sign = 1;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t best = n;
    unsigned best_deg = 0;
    for (std::size_t r = k; r < n; ++r) {
      if (M[r][k].is_zero()) continue;
      unsigned d = M[r][k].total_degree();
      if (best == n || d < best_deg) {
        best = r;
        best_deg = d;
      }
    }
    if (best == n) return RatFn::zero(chart);
    if (best != k) {
      std::swap(M[k], M[best]);
      sign = -sign;
    }
    if (k + 1 == n) break;
    const Poly pivot = M[k][k];
    for (std::size_t r = k + 1; r < n; ++r) {
      for (std::size_t j = k + 1; j < n; ++j) {
        Poly t = M[r][j] * pivot - M[r][k] * M[k][j];
        Poly q(chart);
        if (!Poly::try_divide_exact(t, prev, q))
          throw Error("internal: Bareiss division failed");
        M[r][j] = std::move(q);
      }
      M[r][k] = Poly(chart);
    }
    prev = pivot;
  }
  RatFn d = RatFn(M[n - 1][n - 1]) / scaling;
  return sign < 0 ? -d : d;
}

MatRF inverse(const MatRF& A) {
  const std::size_t n = A.size();
  if (n == 0) throw DimensionError("inverse of empty matrix");
  ChartPtr chart = A[0][0].chart();
  MatRF inv = mat_zero(chart, n, n);
  for (std::size_t c = 0; c < n; ++c) {
    VecRF e(n, RatFn::zero(chart));
    e[c] = RatFn::one(chart);
    LinearSolution s = solve_linear(A, e);
    if (!s.sat || s.rank < n)
      throw Error("matrix is singular over the fraction field");
    for (std::size_t r = 0; r < n; ++r) inv[r][c] = s.particular[r];
  }
  return inv;
}

bool in_span(const std::vector<VecRF>& span, const VecRF& v, VecRF* coeffs) {
  if (span.empty()) {
    for (const auto& e : v)
      if (!e.is_zero()) return false;
    if (coeffs) coeffs->clear();
    return true;
  }
  const std::size_t dim = span[0].size();
  if (v.size() != dim) throw DimensionError("in_span: length mismatch");
  ChartPtr chart = span[0][0].chart();
  // solve span^T c = v
  MatRF A = mat_zero(chart, dim, span.size());
  for (std::size_t j = 0; j < span.size(); ++j)
    for (std::size_t i = 0; i < dim; ++i) A[i][j] = span[j][i];
  LinearSolution s = solve_linear(A, v);
  if (!s.sat) return false;
  if (coeffs) *coeffs = s.particular;
  return true;
}

MatRF mat_mul(const MatRF& A, const MatRF& B) {
  if (A.empty() || B.empty()) return {};
  const std::size_t n = A.size(), k = B.size(), m = B[0].size();
  ChartPtr chart = A[0][0].chart();
  MatRF C = mat_zero(chart, n, m);
  for (std::size_t i = 0; i < n; ++i) {
    if (A[i].size() != k) throw DimensionError("mat_mul: shape mismatch");
    for (std::size_t j = 0; j < m; ++j) {
      RatFn acc = RatFn::zero(chart);
      for (std::size_t t = 0; t < k; ++t) {
        if (A[i][t].is_zero() || B[t][j].is_zero()) continue;
        acc = acc + A[i][t] * B[t][j];
      }
      C[i][j] = acc;
    }
  }
  return C;
}

VecRF mat_apply(const MatRF& A, const VecRF& x) {
  if (A.empty()) return {};
  ChartPtr chart = A[0][0].chart();
  VecRF y(A.size(), RatFn::zero(chart));
  for (std::size_t i = 0; i < A.size(); ++i) {
    if (A[i].size() != x.size()) throw DimensionError("mat_apply: shape mismatch");
    RatFn acc = RatFn::zero(chart);
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (A[i][j].is_zero() || x[j].is_zero()) continue;
      acc = acc + A[i][j] * x[j];
    }
    y[i] = acc;
  }
  return y;
}

}  // namespace cartan
