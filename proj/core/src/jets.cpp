#include "cartan/jets.hpp"

#include <algorithm>

#include "cartan/errors.hpp"
#include "cartan/linalg.hpp"

namespace cartan {

MultiIndexSet MultiIndexSet::make(unsigned n, unsigned k) {
  MultiIndexSet s;
  s.n = n;
  s.k = k;
  Mono m(n, 0);
  // enumerate all monomials of degree <= k by odometer, then sort grlex
  std::vector<Mono> all;
  for (;;) {
    if (mono_degree(m) <= k) all.push_back(m);
    std::size_t i = 0;
    for (; i < n; ++i) {
      if (++m[i] <= k && mono_degree(m) <= k) break;
      m[i] = 0;
    }
    if (i == n) break;
  }
  std::sort(all.begin(), all.end(), GrlexLess{});
  s.list = std::move(all);
  for (std::size_t i = 0; i < s.list.size(); ++i) s.pos.emplace(s.list[i], i);
  return s;
}

std::size_t MultiIndexSet::index(const Mono& m) const {
  auto it = pos.find(m);
  if (it == pos.end()) throw DimensionError("multi-index out of range");
  return it->second;
}

Rat mono_factorial(const Mono& m) {
  Int f = 1;
  for (auto e : m) f *= int_factorial(e);
  return Rat(f);
}

// --- truncated power series ------------------------------------------------

namespace {

template <class F>
struct TSeries {
  unsigned n = 0, k = 0;
  std::map<Mono, F, GrlexLess> c;

  void add(const Mono& m, const F& v) {
    if (f_is_zero(v) || mono_degree(m) > k) return;
    auto [it, inserted] = c.emplace(m, v);
    if (!inserted) {
      it->second = it->second + v;
      if (f_is_zero(it->second)) c.erase(it);
    }
  }
};

template <class F>
TSeries<F> ts_mul(const TSeries<F>& a, const TSeries<F>& b) {
  TSeries<F> r{a.n, a.k, {}};
  Mono m(a.n);
  for (const auto& [ma, ca] : a.c)
    for (const auto& [mb, cb] : b.c) {
      unsigned d = mono_degree(ma) + mono_degree(mb);
      if (d > a.k) continue;
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = ma[i] + mb[i];
      r.add(m, ca * cb);
    }
  return r;
}

template <class F>
TSeries<F> ts_one(unsigned n, unsigned k, const F& proto) {
  TSeries<F> r{n, k, {}};
  r.add(Mono(n, 0), f_one(proto));
  return r;
}

// outer(y_1..y_m) with y_j := inner[j] (zero constant term), truncated
template <class F>
std::vector<TSeries<F>> ts_compose(const std::vector<TSeries<F>>& outer,
                                   const std::vector<TSeries<F>>& inner,
                                   const F& proto) {
  if (inner.empty()) throw DimensionError("ts_compose: empty inner");
  const unsigned n = inner[0].n, k = inner[0].k;
  // power cache inner[j]^e
  std::vector<std::vector<TSeries<F>>> pw(inner.size());
  for (std::size_t j = 0; j < inner.size(); ++j) pw[j].push_back(ts_one(n, k, proto));
  auto power = [&](std::size_t j, unsigned e) -> const TSeries<F>& {
    while (pw[j].size() <= e) pw[j].push_back(ts_mul(pw[j].back(), inner[j]));
    return pw[j][e];
  };
  std::vector<TSeries<F>> out;
  out.reserve(outer.size());
  for (const auto& g : outer) {
    TSeries<F> acc{n, k, {}};
    for (const auto& [beta, coeff] : g.c) {
      TSeries<F> term = ts_one(n, k, proto);
      bool dead = false;
      for (std::size_t j = 0; j < beta.size(); ++j) {
        if (beta[j] == 0) continue;
        term = ts_mul(term, power(j, beta[j]));
        if (term.c.empty()) {
          dead = true;
          break;
        }
      }
      if (dead) continue;
      for (const auto& [m, v] : term.c) acc.add(m, coeff * v);
    }
    out.push_back(std::move(acc));
  }
  return out;
}

// helper: 1/fac in the scalar type of the exemplar
inline Rat inv_factor(const Rat& fac, const Rat&) { return Rat(1) / fac; }
inline RatFn inv_factor(const Rat& fac, const RatFn& proto) {
  return RatFn::constant(proto.chart(), Rat(1) / fac);
}

template <class F>
std::vector<TSeries<F>> series_of_jet(const Jet<F>& j, const MultiIndexSet& ms) {
  std::vector<TSeries<F>> s;
  s.reserve(j.n);
  for (unsigned i = 0; i < j.n; ++i) {
    TSeries<F> t{j.n, j.k, {}};
    for (std::size_t p = 0; p < ms.list.size(); ++p) {
      const Mono& a = ms.list[p];
      if (mono_degree(a) == 0) continue;  // base point dropped
      const F& u = j.table[i][p];
      if (f_is_zero(u)) continue;
      t.add(a, u * inv_factor(mono_factorial(a), u));
    }
    s.push_back(std::move(t));
  }
  return s;
}

template <class F>
std::vector<std::vector<F>> f_mat_inverse(std::vector<std::vector<F>> M, const F& proto) {
  const std::size_t n = M.size();
  std::vector<std::vector<F>> inv(n, std::vector<F>(n, f_zero(proto)));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = f_one(proto);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    while (p < n && f_is_zero(M[p][c])) ++p;
    if (p == n) throw Error("singular linear part");
    std::swap(M[p], M[c]);
    std::swap(inv[p], inv[c]);
    F d = M[c][c];
    for (std::size_t j = 0; j < n; ++j) {
      M[c][j] = M[c][j] / d;
      inv[c][j] = inv[c][j] / d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || f_is_zero(M[r][c])) continue;
      F f = M[r][c];
      for (std::size_t j = 0; j < n; ++j) {
        M[r][j] = M[r][j] - f * M[c][j];
        inv[r][j] = inv[r][j] - f * inv[c][j];
      }
    }
  }
  return inv;
}

}  // namespace

// --- jet arithmetic --------------------------------------------------------

template <class F>
Jet<F> jet_identity(unsigned n, unsigned k, const std::vector<F>& at) {
  if (at.size() != n) throw DimensionError("jet_identity: point length");
  MultiIndexSet ms = MultiIndexSet::make(n, k);
  Jet<F> j;
  j.n = n;
  j.k = k;
  j.source = at;
  j.table.assign(n, std::vector<F>(ms.count(), f_zero(at[0])));
  for (unsigned i = 0; i < n; ++i) {
    j.table[i][0] = at[i];
    Mono e(n, 0);
    e[i] = 1;
    j.table[i][ms.index(e)] = f_one(at[0]);
  }
  return j;
}

template <class F>
Jet<F> jet_project(const Jet<F>& j, unsigned k) {
  if (k > j.k) throw DimensionError("jet_project: cannot raise order");
  MultiIndexSet lo = MultiIndexSet::make(j.n, k);
  Jet<F> r;
  r.n = j.n;
  r.k = k;
  r.source = j.source;
  r.table.assign(j.n, {});
  for (unsigned i = 0; i < j.n; ++i)
    for (std::size_t p = 0; p < lo.count(); ++p) r.table[i].push_back(j.table[i][p]);
  return r;
}

template <class F>
bool jet_eq(const Jet<F>& a, const Jet<F>& b) {
  if (a.n != b.n || a.k != b.k) return false;
  for (unsigned i = 0; i < a.n; ++i) {
    if (!f_eq(a.source[i], b.source[i])) return false;
    for (std::size_t p = 0; p < a.table[i].size(); ++p)
      if (!f_eq(a.table[i][p], b.table[i][p])) return false;
  }
  return true;
}

template <class F>
Jet<F> jet_compose(const Jet<F>& g, const Jet<F>& f) {
  if (g.n != f.n || g.k != f.k) throw DimensionError("jet_compose: order/dimension mismatch");
  for (unsigned i = 0; i < f.n; ++i)
    if (!f_eq(g.source[i], f.table[i][0]))
      throw Error("jet_compose: source(g) != target(f)");
  MultiIndexSet ms = MultiIndexSet::make(f.n, f.k);
  const F proto = f.source.empty() ? f.table[0][0] : f.source[0];
  auto outer = series_of_jet(g, ms);
  auto inner = series_of_jet(f, ms);
  auto comp = ts_compose(outer, inner, proto);
  Jet<F> r;
  r.n = f.n;
  r.k = f.k;
  r.source = f.source;
  r.table.assign(f.n, std::vector<F>(ms.count(), f_zero(proto)));
  for (unsigned i = 0; i < f.n; ++i) {
    r.table[i][0] = g.table[i][0];
    for (const auto& [m, c] : comp[i].c) {
      if (mono_degree(m) == 0) continue;
      r.table[i][ms.index(m)] = c * f_from_rat(proto, mono_factorial(m));
    }
  }
  return r;
}

template <class F>
Jet<F> jet_inverse(const Jet<F>& j) {
  if (j.k == 0) {
    Jet<F> r;
    r.n = j.n;
    r.k = 0;
    r.source = j.target();
    r.table.assign(j.n, {});
    for (unsigned i = 0; i < j.n; ++i) r.table[i].push_back(j.source[i]);
    return r;
  }
  MultiIndexSet ms = MultiIndexSet::make(j.n, j.k);
  const F proto = j.table[0][0];
  // Jacobian block
  std::vector<std::vector<F>> A(j.n, std::vector<F>(j.n, f_zero(proto)));
  for (unsigned i = 0; i < j.n; ++i)
    for (unsigned a = 0; a < j.n; ++a) {
      Mono e(j.n, 0);
      e[a] = 1;
      A[i][a] = j.table[i][ms.index(e)];
    }
  auto Ainv = f_mat_inverse(A, proto);

  auto F_ser = series_of_jet(j, ms);
  // linear series h -> Ainv h  (used for the degree-m correction)
  std::vector<TSeries<F>> lin(j.n);
  for (unsigned i = 0; i < j.n; ++i) {
    lin[i] = TSeries<F>{j.n, j.k, {}};
    for (unsigned a = 0; a < j.n; ++a) {
      Mono e(j.n, 0);
      e[a] = 1;
      lin[i].add(e, Ainv[i][a]);
    }
  }
  // start with H = Ainv h, refine degree by degree
  std::vector<TSeries<F>> H = lin;
  for (unsigned m = 2; m <= j.k; ++m) {
    auto C = ts_compose(H, F_ser, proto);  // should be id up to degree m-1
    // error at degree m
    std::vector<TSeries<F>> E(j.n);
    for (unsigned i = 0; i < j.n; ++i) {
      E[i] = TSeries<F>{j.n, j.k, {}};
      for (const auto& [mm, c] : C[i].c) {
        Mono id_m(j.n, 0);
        id_m[i] = 1;
        if (mono_degree(mm) == m) E[i].add(mm, c);
      }
    }
    // H_m(y) = -E_m(Ainv y)
    auto corr = ts_compose(E, lin, proto);
    for (unsigned i = 0; i < j.n; ++i)
      for (const auto& [mm, c] : corr[i].c) H[i].add(mm, f_zero(proto) - c);
  }
  Jet<F> r;
  r.n = j.n;
  r.k = j.k;
  r.source = j.target();
  r.table.assign(j.n, std::vector<F>(ms.count(), f_zero(proto)));
  for (unsigned i = 0; i < j.n; ++i) {
    r.table[i][0] = j.source[i];
    for (const auto& [m, c] : H[i].c)
      r.table[i][ms.index(m)] = c * f_from_rat(proto, mono_factorial(m));
  }
  return r;
}

template Jet<Rat> jet_identity(unsigned, unsigned, const std::vector<Rat>&);
template Jet<RatFn> jet_identity(unsigned, unsigned, const std::vector<RatFn>&);
template Jet<Rat> jet_project(const Jet<Rat>&, unsigned);
template Jet<RatFn> jet_project(const Jet<RatFn>&, unsigned);
template bool jet_eq(const Jet<Rat>&, const Jet<Rat>&);
template bool jet_eq(const Jet<RatFn>&, const Jet<RatFn>&);
template Jet<Rat> jet_compose(const Jet<Rat>&, const Jet<Rat>&);
template Jet<RatFn> jet_compose(const Jet<RatFn>&, const Jet<RatFn>&);
template Jet<Rat> jet_inverse(const Jet<Rat>&);
template Jet<RatFn> jet_inverse(const Jet<RatFn>&);

JetFn jet_of_map_symbolic(const RatMap& F, unsigned k) {
  const ChartPtr& src = F.source();
  const unsigned n = static_cast<unsigned>(src->dim());
  if (F.target()->dim() != n)
    throw DimensionError("jets need equal source and target dimension");
  MultiIndexSet ms = MultiIndexSet::make(n, k);
  JetFn j;
  j.n = n;
  j.k = k;
  for (unsigned a = 0; a < n; ++a) j.source.push_back(RatFn::variable(src, a));
  j.table.assign(n, {});
  for (unsigned i = 0; i < n; ++i) {
    std::map<Mono, RatFn, GrlexLess> memo;
    for (const Mono& m : ms.list) {
      if (mono_degree(m) == 0) {
        memo.emplace(m, F.components()[i]);
        continue;
      }
      unsigned a = 0;
      while (m[a] == 0) ++a;
      Mono parent = m;
      parent[a] -= 1;
      memo.emplace(m, memo.at(parent).deriv(a));
    }
    for (const Mono& m : ms.list) j.table[i].push_back(memo.at(m));
  }
  return j;
}

JetPoint jet_of_map(const RatMap& F, const std::vector<Rat>& x0, unsigned k) {
  JetFn sym = jet_of_map_symbolic(F, k);
  JetPoint j;
  j.n = sym.n;
  j.k = k;
  j.source = x0;
  j.table.assign(sym.n, {});
  for (unsigned i = 0; i < sym.n; ++i)
    for (const auto& e : sym.table[i]) j.table[i].push_back(e.eval(x0));
  return j;
}

// --- jet charts ------------------------------------------------------------

namespace {
std::string letter_name(const char* three, const char* stem, unsigned i, unsigned n) {
  if (n <= 3) return std::string(1, three[i]);
  return std::string(stem) + std::to_string(i + 1);
}

std::string u_name(unsigned n, unsigned i, const Mono& alpha) {
  std::string t = letter_name("XYZ", "X", i, n);
  if (mono_degree(alpha) == 0) return t;
  t += "_";
  for (unsigned a = 0; a < n; ++a)
    for (std::uint32_t e = 0; e < alpha[a]; ++e)
      t += letter_name("xyz", "x", a, n);
  return t;
}
}  // namespace

JetChartInfo jet_chart(unsigned n, unsigned k) {
  JetChartInfo jc;
  jc.n = n;
  jc.k = k;
  jc.midx = MultiIndexSet::make(n, k);
  std::vector<std::string> vars;
  for (unsigned a = 0; a < n; ++a) vars.push_back(letter_name("xyz", "x", a, n));
  for (std::size_t p = 0; p < jc.midx.count(); ++p)
    for (unsigned i = 0; i < n; ++i) vars.push_back(u_name(n, i, jc.midx.list[p]));
  ChartPtr plain = Chart::make(vars);
  if (k >= 1) {
    // Jacobian block determinant declared nonvanishing
    MatRF J = mat_zero(plain, n, n);
    for (unsigned i = 0; i < n; ++i)
      for (unsigned a = 0; a < n; ++a) {
        Mono e(n, 0);
        e[a] = 1;
        J[i][a] = RatFn::variable(plain, n + jc.midx.index(e) * n + i);
      }
    RatFn d = det(J);
    jc.chart = Chart::make_with(vars, {d.num()});
  } else {
    jc.chart = plain;
  }
  return jc;
}

std::vector<std::pair<unsigned, Mono>> JetChartInfo::frame_pairs() const {
  std::vector<std::pair<unsigned, Mono>> out;
  for (const Mono& a : midx.list) {
    if (mono_degree(a) + 1 > k) continue;  // |alpha| <= k-1
    for (unsigned i = 0; i < n; ++i) out.emplace_back(i, a);
  }
  return out;
}

JetFn JetChartInfo::generic_jet() const {
  JetFn j;
  j.n = n;
  j.k = k;
  for (unsigned a = 0; a < n; ++a) j.source.push_back(RatFn::variable(chart, xvar(a)));
  j.table.assign(n, {});
  for (unsigned i = 0; i < n; ++i)
    for (std::size_t p = 0; p < midx.count(); ++p)
      j.table[i].push_back(RatFn::variable(chart, uvar(i, p)));
  return j;
}

ChartPtr JetChartInfo::base_chart() const {
  std::vector<std::string> vars;
  for (unsigned a = 0; a < n; ++a) vars.push_back(chart->var(a));
  return Chart::make(vars);
}

RatMap JetChartInfo::unit_section(const ChartPtr& base) const {
  if (base->dim() != n) throw DimensionError("unit_section: base dimension");
  VecRF comp;
  for (unsigned a = 0; a < n; ++a) comp.push_back(RatFn::variable(base, a));
  for (std::size_t p = 0; p < midx.count(); ++p) {
    const Mono& alpha = midx.list[p];
    for (unsigned i = 0; i < n; ++i) {
      if (mono_degree(alpha) == 0) {
        comp.push_back(RatFn::variable(base, i));
      } else if (mono_degree(alpha) == 1) {
        unsigned a = 0;
        while (alpha[a] == 0) ++a;
        comp.push_back(RatFn::constant(base, a == i ? 1 : 0));
      } else {
        comp.push_back(RatFn::zero(base));
      }
    }
  }
  return RatMap(base, chart, std::move(comp));
}

CartanFormData cartan_form_chart(unsigned n, unsigned k) {
  if (k < 1) throw DimensionError("cartan_form_chart: k must be >= 1");
  CartanFormData cf;
  cf.jc = jet_chart(n, k);
  cf.frame = cf.jc.frame_pairs();
  const ChartPtr& C = cf.jc.chart;
  const MultiIndexSet& ms = cf.jc.midx;
  MultiIndexSet lo = MultiIndexSet::make(n, k - 1);

  // right-translation matrix via symbolic composition in indeterminates
  JetFn G1 = jet_project(cf.jc.generic_jet(), k - 1);
  JetFn Ginv = jet_inverse(G1);

  // extended chart with h-indeterminates
  std::vector<std::string> evars = C->vars();
  for (std::size_t p = 0; p < lo.count(); ++p)
    for (unsigned i = 0; i < n; ++i)
      evars.push_back("h" + u_name(n, i, lo.list[p]));
  ChartPtr CE = Chart::make(evars);
  const std::size_t base_count = C->dim();
  auto hvar = [&](unsigned i, std::size_t p) { return base_count + p * n + i; };

  VecRF lift_vals;
  for (std::size_t v = 0; v < C->dim(); ++v) lift_vals.push_back(RatFn::variable(CE, v));
  auto lift = [&](const RatFn& f) { return f.subst(lift_vals); };

  JetFn H;
  H.n = n;
  H.k = k - 1;
  for (unsigned a = 0; a < n; ++a) H.source.push_back(RatFn::variable(CE, cf.jc.xvar(a)));
  H.table.assign(n, {});
  for (unsigned i = 0; i < n; ++i)
    for (std::size_t p = 0; p < lo.count(); ++p)
      H.table[i].push_back(RatFn::variable(CE, hvar(i, p)));

  JetFn Ginv_l;
  Ginv_l.n = n;
  Ginv_l.k = k - 1;
  for (const auto& e : Ginv.source) Ginv_l.source.push_back(lift(e));
  Ginv_l.table.assign(n, {});
  for (unsigned i = 0; i < n; ++i)
    for (const auto& e : Ginv.table[i]) Ginv_l.table[i].push_back(lift(e));

  JetFn composed = jet_compose(H, Ginv_l);

  // back substitution CE -> C: identity on chart vars, h^i_alpha -> u^i_alpha
  VecRF back;
  for (std::size_t v = 0; v < C->dim(); ++v) back.push_back(RatFn::variable(C, v));
  for (std::size_t p = 0; p < lo.count(); ++p)
    for (unsigned i = 0; i < n; ++i)
      back.push_back(RatFn::variable(C, cf.jc.uvar(i, p)));

  // vertical correction forms V^{(i,alpha)} = du^i_alpha - u^i_{alpha+e_a} dx^a
  std::vector<DForm> vert;
  for (std::size_t p = 0; p < lo.count(); ++p) {
    const Mono& alpha = lo.list[p];
    for (unsigned i = 0; i < n; ++i) {
      DForm v = DForm::d_var(C, cf.jc.uvar(i, ms.index(alpha)));
      for (unsigned a = 0; a < n; ++a) {
        Mono up = alpha;
        up[a] += 1;
        RatFn coef = RatFn::variable(C, cf.jc.uvar(i, ms.index(up)));
        v = v - DForm::d_var(C, cf.jc.xvar(a)) * coef;
      }
      vert.push_back(std::move(v));
    }
  }

  for (std::size_t fb = 0; fb < cf.frame.size(); ++fb) {
    const auto& [j, beta] = cf.frame[fb];
    std::size_t bpos = lo.index(beta);
    DForm omega(C, 1);
    for (std::size_t p = 0; p < lo.count(); ++p)
      for (unsigned i = 0; i < n; ++i) {
        RatFn M = composed.table[j][bpos].deriv(hvar(i, p));
        if (M.is_zero()) continue;
        omega = omega + vert[p * n + i] * M.subst(back);
      }
    cf.components.push_back(std::move(omega));
  }
  return cf;
}

std::vector<DForm> restrict_along(const std::vector<DForm>& comps, const RatMap& emb) {
  std::vector<DForm> out;
  out.reserve(comps.size());
  for (const auto& c : comps) out.push_back(pullback(emb, c));
  return out;
}

// --- sections --------------------------------------------------------------

JetSection jet_section(const ChartPtr& base, unsigned k,
                       const std::vector<std::vector<RatFn>>& comp) {
  JetSection s;
  s.base = base;
  s.n = static_cast<unsigned>(base->dim());
  s.k = k;
  s.midx = MultiIndexSet::make(s.n, k);
  if (comp.size() != s.n) throw DimensionError("jet_section: component count");
  for (const auto& c : comp)
    if (c.size() != s.midx.count())
      throw DimensionError("jet_section: table length != multi-index count");
  s.comp = comp;
  return s;
}

JetSection prolong_section(const ChartPtr& base, unsigned k, const VecRF& order0) {
  const unsigned n = static_cast<unsigned>(base->dim());
  if (order0.size() != n) throw DimensionError("prolong_section: component count");
  MultiIndexSet ms = MultiIndexSet::make(n, k);
  std::vector<std::vector<RatFn>> comp(n);
  for (unsigned i = 0; i < n; ++i) {
    std::map<Mono, RatFn, GrlexLess> memo;
    for (const Mono& m : ms.list) {
      if (mono_degree(m) == 0) {
        memo.emplace(m, order0[i]);
        continue;
      }
      unsigned a = 0;
      while (m[a] == 0) ++a;
      Mono parent = m;
      parent[a] -= 1;
      memo.emplace(m, memo.at(parent).deriv(a));
    }
    for (const Mono& m : ms.list) comp[i].push_back(memo.at(m));
  }
  return jet_section(base, k, comp);
}

HolonomicDefect holonomic_defect(const JetSection& b) {
  HolonomicDefect hd;
  hd.midx = MultiIndexSet::make(b.n, b.k == 0 ? 0 : b.k - 1);
  hd.d.assign(b.n, {});
  for (unsigned i = 0; i < b.n; ++i) {
    for (const Mono& alpha : hd.midx.list) {
      if (mono_degree(alpha) + 1 > b.k) break;
      std::vector<RatFn> row;
      for (unsigned a = 0; a < b.n; ++a) {
        Mono up = alpha;
        up[a] += 1;
        row.push_back(b.comp[i][b.midx.index(alpha)].deriv(a) -
                      b.comp[i][b.midx.index(up)]);
      }
      hd.d[i].push_back(std::move(row));
    }
  }
  return hd;
}

bool HolonomicDefect::all_zero() const {
  for (const auto& per_i : d)
    for (const auto& row : per_i)
      for (const auto& e : row)
        if (!e.is_zero()) return false;
  return true;
}

JetSection spencer_D(const JetSection& s, const VField& X) {
  if (s.k == 0) throw DimensionError("spencer_D: order-0 section has no lower order");
  require_compatible(s.base, X.chart(), "spencer_D");
  MultiIndexSet lo = MultiIndexSet::make(s.n, s.k - 1);
  std::vector<std::vector<RatFn>> comp(s.n);
  for (unsigned i = 0; i < s.n; ++i)
    for (const Mono& alpha : lo.list) {
      RatFn v = X.apply(s.comp[i][s.midx.index(alpha)]);
      for (unsigned a = 0; a < s.n; ++a) {
        Mono up = alpha;
        up[a] += 1;
        v = v - X[a] * s.comp[i][s.midx.index(up)];
      }
      comp[i].push_back(std::move(v));
    }
  return jet_section(s.base, s.k - 1, comp);
}

// --- prolongation of pseudogroup elements ----------------------------------

RatMap prolong_element(const RatMap& phi, const RatMap& phi_inv, unsigned k) {
  if (!phi.is_inverse(phi_inv))
    throw Error("prolong_element: inverse verification failed");
  return prolong_element(phi, k);
}

RatMap prolong_element(const RatMap& phi, const RatMap& phi_inv, unsigned k,
                       const RatMap& embedding) {
  if (!phi.is_inverse(phi_inv))
    throw Error("prolong_element: inverse verification failed");
  return prolong_element(phi, k, embedding);
}

RatMap prolong_element(const RatMap& phi, unsigned k) {
  JetChartInfo jc = jet_chart(static_cast<unsigned>(phi.source()->dim()), k);
  const ChartPtr& C = jc.chart;
  const unsigned n = jc.n;

  // symbolic jet of phi at the generic source point, lifted to the jet chart
  JetFn Phi = jet_of_map_symbolic(phi, k);
  VecRF lift_vals;
  for (unsigned a = 0; a < n; ++a) lift_vals.push_back(RatFn::variable(C, jc.xvar(a)));
  JetFn Phi_l;
  Phi_l.n = n;
  Phi_l.k = k;
  for (const auto& e : Phi.source) Phi_l.source.push_back(e.subst(lift_vals));
  Phi_l.table.assign(n, {});
  for (unsigned i = 0; i < n; ++i)
    for (const auto& e : Phi.table[i]) Phi_l.table[i].push_back(e.subst(lift_vals));

  JetFn Phi_inv_jet = jet_inverse(Phi_l);
  JetFn J0 = jc.generic_jet();
  JetFn moved = jet_compose(J0, Phi_inv_jet);

  VecRF comp;
  for (unsigned a = 0; a < n; ++a) comp.push_back(moved.source[a]);
  for (std::size_t p = 0; p < jc.midx.count(); ++p)
    for (unsigned i = 0; i < n; ++i) comp.push_back(moved.table[i][p]);
  return RatMap(C, C, std::move(comp));
}

std::vector<std::size_t> section_slots(const RatMap& embedding) {
  const ChartPtr& red = embedding.source();
  std::vector<std::size_t> slots;
  for (std::size_t rv = 0; rv < red->dim(); ++rv) {
    RatFn v = RatFn::variable(red, rv);
    std::optional<std::size_t> found;
    for (std::size_t fv = 0; fv < embedding.components().size(); ++fv)
      if (embedding.components()[fv].identical(v)) {
        found = fv;
        break;
      }
    if (!found)
      throw SchemaError("embedding has no coordinate slot for variable " + red->var(rv));
    slots.push_back(*found);
  }
  return slots;
}

RatMap prolong_element(const RatMap& phi, unsigned k, const RatMap& embedding) {
  RatMap full = prolong_element(phi, k);
  const ChartPtr& red = embedding.source();
  require_compatible(full.source(), embedding.target(), "prolong_element embedding");
  RatMap on_locus = full.after(embedding);  // reduced -> full chart
  std::vector<std::size_t> slots = section_slots(embedding);
  VecRF comp;
  for (std::size_t rv = 0; rv < red->dim(); ++rv)
    comp.push_back(on_locus.components()[slots[rv]]);
  RatMap reduced(red, red, std::move(comp));
  // verify the embedded locus is preserved: E o reduced == full o E
  RatMap lhs = embedding.after(reduced);
  for (std::size_t fv = 0; fv < embedding.components().size(); ++fv)
    if (!lhs.components()[fv].eq(on_locus.components()[fv]))
      throw Error("prolonged element leaves the embedded locus");
  return reduced;
}

}  // namespace cartan
