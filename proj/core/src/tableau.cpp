#include "cartan/tableau.hpp"

#include "cartan/errors.hpp"

namespace cartan {

std::vector<std::vector<std::uint32_t>> increasing_tuples(std::size_t n, std::size_t m) {
  std::vector<std::vector<std::uint32_t>> out;
  if (m > n) return out;
  std::vector<std::uint32_t> t(m);
  for (std::size_t i = 0; i < m; ++i) t[i] = static_cast<std::uint32_t>(i);
  for (;;) {
    out.push_back(t);
    if (m == 0) break;
    std::size_t i = m;
    while (i-- > 0) {
      if (t[i] < n - m + i) {
        ++t[i];
        for (std::size_t j = i + 1; j < m; ++j) t[j] = t[j - 1] + 1;
        break;
      }
      if (i == 0) return out;
    }
  }
  return out;
}

Tableau::Tableau(ChartPtr chart, std::size_t dimE, std::size_t dimF,
                 std::vector<MatRF> basis)
    : chart_(std::move(chart)), dimE_(dimE), dimF_(dimF), basis_(std::move(basis)) {
  MatRF flat;
  for (const auto& B : basis_) {
    if (B.size() != dimF_) throw DimensionError("tableau basis matrix row count != dimF");
    VecRF row;
    for (const auto& r : B) {
      if (r.size() != dimE_) throw DimensionError("tableau basis matrix col count != dimE");
      for (const auto& e : r) row.push_back(e);
    }
    flat.push_back(std::move(row));
  }
  if (!flat.empty() && rank(flat) != basis_.size())
    throw Error("tableau basis matrices are linearly dependent");
}

Tableau Tableau::full(std::size_t n) {
  ChartPtr c = Chart::make(std::vector<std::string>{});
  std::vector<MatRF> basis;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      MatRF B = mat_zero(c, n, n);
      B[i][j] = RatFn::one(c);
      basis.push_back(std::move(B));
    }
  return Tableau(c, n, n, std::move(basis));
}

Tableau Tableau::so2() {
  ChartPtr c = Chart::make(std::vector<std::string>{});
  MatRF B = mat_zero(c, 2, 2);
  B[0][1] = RatFn::constant(c, -1);
  B[1][0] = RatFn::one(c);
  return Tableau(c, 2, 2, {B});
}

Tableau Tableau::zero(ChartPtr chart, std::size_t dimE, std::size_t dimF) {
  return Tableau(std::move(chart), dimE, dimF, {});
}

ProlongTower::ProlongTower(Tableau base) : base_(std::move(base)) {}

std::size_t ProlongTower::level_dim(std::size_t l) {
  if (l == 0) return base_.dim();
  ensure_level(l);
  return levels_[l - 1].size();
}

const std::vector<MatRF>& ProlongTower::level_basis(std::size_t l) {
  if (l == 0) return base_.basis();
  ensure_level(l);
  return levels_[l - 1];
}

void ProlongTower::ensure_level(std::size_t l) {
  const ChartPtr& chart = base_.chart();
  const std::size_t nE = base_.dimE();
  while (levels_.size() < l) {
    std::size_t cur = levels_.size() + 1;  // level being built
    // previous level data: basis matrices into the level below
    const std::vector<MatRF>& prev =
        (cur == 1) ? base_.basis() : levels_[cur - 2];
    const std::size_t s_prev = prev.size();
    const std::size_t s_below =
        (cur == 1) ? base_.dimF()
                   : (cur == 2 ? base_.dim() : levels_[cur - 3].size());
    std::vector<MatRF> next;
    if (s_prev == 0) {
      levels_.push_back(std::move(next));
      continue;
    }
    // unknowns xi[mu][a] (mu outer), equations: for a < b, rows in s_below
    const std::size_t unknowns = s_prev * nE;
    MatRF A;
    for (std::size_t a = 0; a < nE; ++a)
      for (std::size_t b = a + 1; b < nE; ++b)
        for (std::size_t v = 0; v < s_below; ++v) {
          VecRF row(unknowns, RatFn::zero(chart));
          for (std::size_t mu = 0; mu < s_prev; ++mu) {
            row[mu * nE + a] = row[mu * nE + a] + prev[mu][v][b];
            row[mu * nE + b] = row[mu * nE + b] - prev[mu][v][a];
          }
          A.push_back(std::move(row));
        }
    VecRF rhs(A.size(), RatFn::zero(chart));
    LinearSolution s = solve_linear(A, rhs, chart, unknowns);
    for (const auto& vec : s.nullspace) {
      MatRF B = mat_zero(chart, s_prev, nE);
      for (std::size_t mu = 0; mu < s_prev; ++mu)
        for (std::size_t a = 0; a < nE; ++a) B[mu][a] = vec[mu * nE + a];
      next.push_back(std::move(B));
    }
    levels_.push_back(std::move(next));
  }
}

MatRF ProlongTower::spencer_delta(std::size_t l, std::size_t m) {
  if (m < 1) throw DimensionError("spencer_delta: m must be >= 1");
  const ChartPtr& chart = base_.chart();
  const std::size_t nE = base_.dimE();
  const std::size_t s_l = level_dim(l);
  const std::size_t s_below = (l == 0) ? base_.dimF() : level_dim(l - 1);
  const std::vector<MatRF>& basis_l = level_basis(l);

  auto dom_tuples = increasing_tuples(nE, m);
  auto cod_tuples = increasing_tuples(nE, m + 1);
  const std::size_t rows = cod_tuples.size() * s_below;
  const std::size_t cols = dom_tuples.size() * s_l;
  MatRF D = mat_zero(chart, rows, cols);
  if (rows == 0 || cols == 0) return D;

  std::map<std::vector<std::uint32_t>, std::size_t> dom_index;
  for (std::size_t i = 0; i < dom_tuples.size(); ++i) dom_index[dom_tuples[i]] = i;

  for (std::size_t K = 0; K < cod_tuples.size(); ++K) {
    const auto& tup = cod_tuples[K];
    for (std::size_t i = 0; i <= m; ++i) {
      std::vector<std::uint32_t> J;
      for (std::size_t j = 0; j <= m; ++j)
        if (j != i) J.push_back(tup[j]);
      auto it = dom_index.find(J);
      if (it == dom_index.end()) continue;
      const std::size_t Jidx = it->second;
      const std::uint32_t u = tup[i];
      const bool neg = (i % 2) == 1;
      for (std::size_t mu = 0; mu < s_l; ++mu) {
        // partial(e_mu)(e_u) in sigma^(l-1) coordinates: column u
        for (std::size_t v = 0; v < s_below; ++v) {
          const RatFn& val = basis_l[mu][v][u];
          if (val.is_zero()) continue;
          RatFn& dst = D[K * s_below + v][Jidx * s_l + mu];
          dst = neg ? dst - val : dst + val;
        }
      }
    }
  }
  return D;
}

Tableau prolong(const Tableau& t) {
  ProlongTower tower(t);
  std::vector<MatRF> basis = tower.level_basis(1);
  return Tableau(t.chart(), t.dimE(), t.dim(), std::move(basis));
}

MatRF spencer_delta(const Tableau& t, std::size_t l, std::size_t m) {
  ProlongTower tower(t);
  return tower.spencer_delta(l, m);
}

SpencerReport cohomology_dims(const Tableau& t, std::size_t l_max, std::size_t m_max) {
  SpencerReport rep;
  rep.witness = Poly::constant(t.chart(), 1);
  ProlongTower tower(t);
  for (std::size_t l = 0; l <= l_max + 1; ++l) {
    std::size_t d = tower.level_dim(l);
    rep.prolong_dims.push_back(d);
    if (d == 0 && !rep.finite_type_order)
      rep.finite_type_order = static_cast<unsigned>(l);
  }
  const std::size_t nE = t.dimE();
  auto dim_dom = [&](std::size_t l, std::size_t m) {
    return increasing_tuples(nE, m).size() * tower.level_dim(l);
  };
  for (std::size_t l = 0; l <= l_max; ++l)
    for (std::size_t m = 1; m <= m_max; ++m) {
      // H^{l,m} = dim ker delta_{l,m} - rank delta_{l+1,m-1}
      MatRF out = tower.spencer_delta(l, m);
      Poly w1(t.chart());
      std::size_t rk_out = out.empty() || out[0].empty() ? 0 : rank(out, w1);
      std::size_t ker = dim_dom(l, m) - rk_out;
      std::size_t rk_in = 0;
      if (m == 1) {
        // incoming map is the inclusion sigma^(l+1) -> Hom(E, sigma^(l))
        rk_in = tower.level_dim(l + 1);
      } else {
        MatRF in = tower.spencer_delta(l + 1, m - 1);
        Poly w2(t.chart());
        rk_in = in.empty() || in[0].empty() ? 0 : rank(in, w2);
        if (!in.empty() && !in[0].empty()) rep.witness = rep.witness * w2;
      }
      if (!out.empty() && !out[0].empty()) rep.witness = rep.witness * w1;
      std::size_t h = ker - rk_in;
      rep.h_dims[{static_cast<int>(l), static_cast<int>(m)}] = h;
      if (m == 1 && h != 0) rep.h_l1_all_zero = false;
    }
  return rep;
}

InvolutivityReport involutivity_verdict(const Tableau& t, std::size_t r,
                                        std::size_t l_max) {
  if (r < 1 || l_max < 1) throw DimensionError("involutivity bounds must be >= 1");
  InvolutivityReport rep;
  rep.spencer = cohomology_dims(t, l_max, r);
  rep.finite_type_order = rep.spencer.finite_type_order;
  rep.acyclic_within_bounds = true;
  for (const auto& [lm, d] : rep.spencer.h_dims)
    if (d != 0) rep.acyclic_within_bounds = false;
  if (rep.finite_type_order)
    rep.verdict = InvolutivityVerdict::FiniteType;
  else if (rep.acyclic_within_bounds)
    rep.verdict = InvolutivityVerdict::PassWithinBounds;
  else
    rep.verdict = InvolutivityVerdict::FailWithinBounds;
  return rep;
}

std::string InvolutivityReport::describe() const {
  switch (verdict) {
    case InvolutivityVerdict::FiniteType:
      return "FINITE-TYPE(" + std::to_string(*finite_type_order) + ") [bounded check]";
    case InvolutivityVerdict::PassWithinBounds:
      return "PASS-within-bounds";
    case InvolutivityVerdict::FailWithinBounds:
      return "FAIL-within-bounds";
  }
  return "?";
}

}  // namespace cartan
