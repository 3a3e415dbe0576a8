#include "cartan/sft.hpp"

#include <algorithm>

#include "cartan/errors.hpp"

namespace cartan {

namespace {

// reads the full-chart jet of a point of the (possibly reduced) groupoid
// chart, through the embedding, with entries substituted by `point`
JetFn embedded_jet(unsigned n, unsigned k, const RatMap& embedding,
                   const VecRF& point, const ChartPtr& on) {
  MultiIndexSet ms = MultiIndexSet::make(n, k);
  JetFn j;
  j.n = n;
  j.k = k;
  auto comp = [&](std::size_t fullvar) {
    return embedding.components()[fullvar].subst(point);
  };
  for (unsigned a = 0; a < n; ++a) j.source.push_back(comp(a));
  j.table.assign(n, {});
  for (std::size_t p = 0; p < ms.count(); ++p)
    for (unsigned i = 0; i < n; ++i) j.table[i].push_back(comp(n + p * n + i));
  return j;
}

VecRF chart_vars(const ChartPtr& c) {
  VecRF v;
  for (std::size_t i = 0; i < c->dim(); ++i) v.push_back(RatFn::variable(c, i));
  return v;
}

GroupoidChart make_jet_groupoid(unsigned n, unsigned k,
                                const std::optional<RatMap>& emb,
                                ChartPtr base) {
  JetChartInfo jc = jet_chart(n, k);
  RatMap embedding = emb ? *emb : RatMap::identity(jc.chart);
  require_compatible(embedding.target(), jc.chart, "jet embedding target");
  ChartPtr total = embedding.source();
  if (!base) base = jc.base_chart();

  std::vector<std::size_t> slots = section_slots(embedding);

  // source and target projections
  VecRF src_comp, tgt_comp;
  for (unsigned a = 0; a < n; ++a) src_comp.push_back(embedding.components()[a]);
  for (unsigned i = 0; i < n; ++i)
    tgt_comp.push_back(embedding.components()[n + 0 * n + i]);
  RatMap src(total, base, src_comp), tgt(total, base, tgt_comp);

  // the unit section in reduced coordinates
  RatMap full_unit = jc.unit_section(base);
  VecRF unit_comp;
  for (std::size_t rv = 0; rv < total->dim(); ++rv)
    unit_comp.push_back(full_unit.components()[slots[rv]]);
  RatMap unit(base, total, unit_comp);
  {  // the locus must contain the units
    RatMap emb_of_unit = embedding.after(unit);
    for (std::size_t v = 0; v < jc.chart->dim(); ++v)
      if (!emb_of_unit.components()[v].eq(full_unit.components()[v]))
        throw Error("embedded locus does not contain the unit section");
  }

  GroupoidChart G(total, base, src, tgt, unit);

  // vertical frame: reduced vars not used as source coordinates
  std::vector<bool> is_src(total->dim(), false);
  for (unsigned a = 0; a < n; ++a) {
    bool found = false;
    for (std::size_t v = 0; v < total->dim(); ++v)
      if (src_comp[a].identical(RatFn::variable(total, v))) {
        is_src[v] = true;
        found = true;
        break;
      }
    if (!found) throw Error("source map must be a coordinate projection");
  }
  for (std::size_t v = 0; v < total->dim(); ++v)
    if (!is_src[v]) G.vertical.push_back(v);

  // composable chart: left fiber vars, then the right-factor vars
  std::vector<std::string> ccnames;
  for (auto v : G.vertical) ccnames.push_back("L_" + total->var(v));
  for (const auto& v : total->vars()) ccnames.push_back(v);
  ChartPtr CC = Chart::make(ccnames);
  const std::size_t fib = G.vertical.size();
  VecRF right_point;  // right factor in reduced coords, on CC
  for (std::size_t v = 0; v < total->dim(); ++v)
    right_point.push_back(RatFn::variable(CC, fib + v));
  // left factor in reduced coords: source coords tied to t(right)
  VecRF left_point(total->dim(), RatFn::zero(CC));
  {
    VecRF tgt_on_cc;
    for (unsigned i = 0; i < n; ++i)
      tgt_on_cc.push_back(tgt.components()[i].subst(right_point));
    std::size_t a = 0;
    for (std::size_t v = 0; v < total->dim(); ++v)
      if (is_src[v]) {
        // match this source slot with its base index
        for (unsigned aa = 0; aa < n; ++aa)
          if (src_comp[aa].identical(RatFn::variable(total, v)))
            left_point[v] = tgt_on_cc[aa];
        ++a;
      }
    for (std::size_t q = 0; q < fib; ++q)
      left_point[G.vertical[q]] = RatFn::variable(CC, q);
  }

  JetFn rightF = embedded_jet(n, k, embedding, right_point, CC);
  JetFn leftF = embedded_jet(n, k, embedding, left_point, CC);
  JetFn prod = jet_compose(leftF, rightF);

  // reduced coordinates of the product + closure check
  VecRF mult_comp;
  {
    VecRF prod_full;
    for (unsigned a = 0; a < n; ++a) prod_full.push_back(prod.source[a]);
    for (std::size_t p = 0; p < jc.midx.count(); ++p)
      for (unsigned i = 0; i < n; ++i) prod_full.push_back(prod.table[i][p]);
    for (std::size_t rv = 0; rv < total->dim(); ++rv)
      mult_comp.push_back(prod_full[slots[rv]]);
    // closure: embedding of the reduced product equals the full product
    for (std::size_t v = 0; v < jc.chart->dim(); ++v)
      if (!embedding.components()[v].subst(mult_comp).eq(prod_full[v]))
        throw Error("embedded locus is not closed under composition");
  }
  GroupoidChart::Composable comp{CC, RatMap(CC, total, mult_comp),
                                 RatMap(CC, total, left_point),
                                 RatMap(CC, total, right_point), std::nullopt};

  // right-invariant frame fields: differentiate mult in the left fiber
  // variables at the unit over t(g)
  VecRF at_unit;  // CC -> total substitution with left := unit(t(g))
  {
    VecRF unit_left;
    VecRF tgt_vals;
    for (unsigned i = 0; i < n; ++i)
      tgt_vals.push_back(tgt.components()[i]);
    for (std::size_t q = 0; q < fib; ++q) {
      // unit section component for this fiber var, evaluated at t(g)
      RatFn uc = unit.components()[G.vertical[q]].subst(tgt_vals);
      unit_left.push_back(uc);
    }
    at_unit = unit_left;
    for (std::size_t v = 0; v < total->dim(); ++v)
      at_unit.push_back(RatFn::variable(total, v));
  }
  for (std::size_t q = 0; q < fib; ++q) {
    VField f(total);
    for (std::size_t v = 0; v < total->dim(); ++v)
      f[v] = comp.mult.components()[v].deriv(q).subst(at_unit);
    G.rinv.push_back(std::move(f));
  }

  // action of the left factor on the adjoint coefficients (k >= 1):
  // transported conjugation, differentiated in an epsilon indeterminate
  if (k >= 1) {
    MultiIndexSet lo = MultiIndexSet::make(n, k - 1);
    std::vector<std::string> cenames = CC->vars();
    cenames.push_back("eps");
    ChartPtr CE = Chart::make(cenames);
    const std::size_t epsv = CE->dim() - 1;
    RatFn eps = RatFn::variable(CE, epsv);
    VecRF lift_cc = chart_vars(CE);
    lift_cc.pop_back();
    auto lift = [&](const RatFn& f) { return f.subst(lift_cc); };

    JetFn leftE;  // order k, entries lifted to CE
    leftE.n = n;
    leftE.k = k;
    for (const auto& e : leftF.source) leftE.source.push_back(lift(e));
    leftE.table.assign(n, {});
    for (unsigned i = 0; i < n; ++i)
      for (const auto& e : leftF.table[i]) leftE.table[i].push_back(lift(e));
    JetFn LF1 = jet_project(leftE, k - 1);
    JetFn LFinv = jet_inverse(LF1);

    auto fp = jc.frame_pairs();
    MatRF Ad = mat_zero(CC, fp.size(), fp.size());
    VecRF back = chart_vars(CC);
    back.push_back(RatFn::zero(CC));  // eps := 0
    for (std::size_t col = 0; col < fp.size(); ++col) {
      const auto& [i0, beta] = fp[col];
      // W_eps: unit at s(left) plus eps in the (i0,beta) slot
      JetFn W;
      W.n = n;
      W.k = k - 1;
      W.source = LF1.source;
      W.table.assign(n, std::vector<RatFn>(lo.count(), RatFn::zero(CE)));
      for (unsigned i = 0; i < n; ++i) {
        W.table[i][0] = LF1.source[i];
        if (k - 1 >= 1) {
          Mono e(n, 0);
          e[i] = 1;
          W.table[i][lo.index(e)] = RatFn::one(CE);
        }
      }
      W.table[i0][lo.index(beta)] =
          W.table[i0][lo.index(beta)] + eps;
      // transported left factor: entries L + eps * (target shift)
      JetFn H = LF1;
      if (mono_degree(beta) == 0) {
        for (unsigned i = 0; i < n; ++i) {
          H.source[i] = H.source[i] + (i == i0 ? eps : RatFn::zero(CE));
          for (std::size_t p = 0; p < lo.count(); ++p) {
            Mono up = lo.list[p];
            up[i0] += 1;
            H.table[i][p] =
                H.table[i][p] + eps * leftE.table[i][jc.midx.index(up)];
          }
        }
        // fix: the source shift direction is i0 for every component
      }
      JetFn conj = jet_compose(jet_compose(H, W), LFinv);
      for (std::size_t row = 0; row < fp.size(); ++row) {
        const auto& [j, gam] = fp[row];
        RatFn val = conj.table[j][lo.index(gam)].deriv(epsv).subst(back);
        Ad[row][col] = val;
      }
    }
    comp.action = std::move(Ad);
  }

  G.comp = std::move(comp);
  return G;
}

}  // namespace

GroupoidChart jet_groupoid(unsigned n, unsigned k) {
  return make_jet_groupoid(n, k, std::nullopt, nullptr);
}

GroupoidChart jet_subgroupoid(unsigned n, unsigned k, const RatMap& embedding,
                              const ChartPtr& base) {
  return make_jet_groupoid(n, k, embedding, base);
}

VField right_invariant_field(const GroupoidChart& G, std::size_t which) {
  if (which >= G.rinv.size()) throw DimensionError("frame index out of range");
  return G.rinv[which];
}

FramedAlgebroid algebroid_from_groupoid(const GroupoidChart& G) {
  const std::size_t r = G.vertical.size();
  const ChartPtr& base = G.base;
  // anchor: dt of the frame fields at units
  MatRF rho = mat_zero(base, base->dim(), r);
  MatRF Jt = G.tgt.jacobian();
  for (std::size_t c = 0; c < r; ++c) {
    for (std::size_t a = 0; a < base->dim(); ++a) {
      RatFn acc = RatFn::zero(G.total);
      for (std::size_t v = 0; v < G.total->dim(); ++v) {
        if (Jt[a][v].is_zero() || G.rinv[c][v].is_zero()) continue;
        acc = acc + Jt[a][v] * G.rinv[c][v];
      }
      rho[a][c] = G.at_units(acc);
    }
  }
  FramedAlgebroid A(base, r, std::move(rho));
  for (std::size_t c = 0; c < r; ++c)
    for (std::size_t d = c + 1; d < r; ++d) {
      VField br = lie_bracket(G.rinv[c], G.rinv[d]);
      // tangent to the s-fibers: only vertical components may survive
      for (std::size_t v = 0; v < G.total->dim(); ++v) {
        if (std::find(G.vertical.begin(), G.vertical.end(), v) != G.vertical.end())
          continue;
        if (!br[v].is_zero())
          throw Error("bracket of right-invariant fields is not vertical");
      }
      for (std::size_t e = 0; e < r; ++e)
        A.set_c(e, c, d, G.at_units(br[G.vertical[e]]));
    }
  return A;
}

std::vector<DForm> groupoid_cartan_form(const GroupoidChart& G, unsigned n, unsigned k,
                                        const std::optional<RatMap>& embedding) {
  CartanFormData cf = cartan_form_chart(n, k);
  if (!embedding) {
    // re-express on G.total (same variable names)
    std::vector<DForm> out;
    VecRF vals = chart_vars(G.total);
    for (const auto& c : cf.components) {
      DForm f(G.total, 1);
      for (const auto& [m, v] : c.terms()) f.add_term(m, v.subst(vals));
      out.push_back(std::move(f));
    }
    return out;
  }
  return restrict_along(cf.components, *embedding);
}

SpencerTable spencer_from_cartanform(const GroupoidChart& G,
                                     const std::vector<DForm>& omega) {
  SpencerTable out;
  const std::size_t dimE = omega.size();
  const std::size_t N = G.total->dim();
  const std::size_t n = G.base->dim();
  const ChartPtr& T = G.total;

  MatRF Jt = G.tgt.jacobian();
  out.D.assign(n, std::vector<VecRF>(G.rinv.size()));
  for (std::size_t b = 0; b < n; ++b) {
    // lift: omega(Xhat) = 0, dt(Xhat) = d/dx_b
    MatRF A;
    VecRF rhs;
    for (const auto& w : omega) {
      VecRF row(N, RatFn::zero(T));
      for (const auto& [m, c] : w.terms()) row[m[0]] = c;
      A.push_back(std::move(row));
      rhs.push_back(RatFn::zero(T));
    }
    for (std::size_t a = 0; a < n; ++a) {
      A.push_back(Jt[a]);
      rhs.push_back(RatFn::constant(T, a == b ? 1 : 0));
    }
    LinearSolution s = solve_linear(A, rhs);
    if (!s.sat) throw Error("no omega-horizontal target lift exists");
    VField Xhat(T, s.particular);
    for (std::size_t c = 0; c < G.rinv.size(); ++c) {
      VField br = lie_bracket(Xhat, G.rinv[c]);
      VecRF val;
      for (std::size_t q = 0; q < dimE; ++q) {
        RatFn on_total = pair(omega[q], br);
        RatFn on_base = G.at_units(on_total);
        if (!on_total.eq(G.tgt.pull(on_base))) out.exact = false;
        val.push_back(on_base);
      }
      out.D[b][c] = std::move(val);
    }
  }
  return out;
}

LpgReport lpg_axiom_check(const GroupoidChart& G, const std::vector<DForm>& omega) {
  LpgReport rep;
  const std::size_t dimE = omega.size();
  const std::size_t N = G.total->dim();
  const ChartPtr& T = G.total;

  MatRF W;  // omega coefficient matrix
  for (const auto& w : omega) {
    VecRF row(N, RatFn::zero(T));
    for (const auto& [m, c] : w.terms()) row[m[0]] = c;
    W.push_back(std::move(row));
  }
  rep.surjective = rank(W) == dimE;

  MatRF Js = G.src.jacobian(), Jt = G.tgt.jacobian();
  auto stack = [&](const MatRF& A, const MatRF& B) {
    MatRF C = A;
    for (const auto& r : B) C.push_back(r);
    return C;
  };
  std::vector<VecRF> ker_s = nullspace(Js);

  // transversality: omega surjective on ker ds
  if (!ker_s.empty()) {
    MatRF M;
    for (const auto& v : ker_s) {
      VecRF row;
      for (std::size_t q = 0; q < dimE; ++q) {
        RatFn acc = RatFn::zero(T);
        for (std::size_t m = 0; m < N; ++m) acc = acc + W[q][m] * v[m];
        row.push_back(acc);
      }
      M.push_back(std::move(row));
    }
    rep.transversal = rank(M) == dimE;
  } else {
    rep.transversal = dimE == 0;
  }

  std::vector<VecRF> k_s = nullspace(stack(W, Js));
  std::vector<VecRF> k_t = nullspace(stack(W, Jt));
  {
    MatRF both;
    for (const auto& v : k_s) both.push_back(v);
    for (const auto& v : k_t) both.push_back(v);
    std::size_t rs = k_s.empty() ? 0 : rank(MatRF(k_s.begin(), k_s.end()));
    std::size_t rt = k_t.empty() ? 0 : rank(MatRF(k_t.begin(), k_t.end()));
    std::size_t rb = both.empty() ? 0 : rank(both);
    rep.kernel_equality = (rs == rt) && (rb == rs);
  }
  if (k_s.empty()) {
    rep.kernel_involutive = true;
  } else {
    std::vector<VField> fields;
    for (const auto& v : k_s) fields.emplace_back(T, v);
    rep.kernel_involutive = frobenius_involutive(fields).involutive;
  }

  // standardness: the symbol map T -> -D(T) is injective on ker(omega|_A)
  {
    MatRF l = mat_zero(G.base, dimE, G.rinv.size());
    for (std::size_t q = 0; q < dimE; ++q)
      for (std::size_t c = 0; c < G.vertical.size(); ++c)
        l[q][c] = G.at_units(
            omega[q].coeff({static_cast<std::uint32_t>(G.vertical[c])}));
    std::vector<VecRF> sig = nullspace(l);
    if (sig.empty()) {
      rep.standard = true;
    } else {
      SpencerTable D = spencer_from_cartanform(G, omega);
      MatRF S;
      for (const auto& Tvec : sig) {
        VecRF row;
        for (std::size_t b = 0; b < G.base->dim(); ++b)
          for (std::size_t q = 0; q < dimE; ++q) {
            RatFn acc = RatFn::zero(G.base);
            for (std::size_t c = 0; c < Tvec.size(); ++c)
              acc = acc + Tvec[c] * D.D[b][c][q];
            row.push_back(acc);
          }
        S.push_back(std::move(row));
      }
      rep.standard = rank(S) == sig.size();
    }
  }

  // multiplicativity residual when the composable parametrization exists
  if (G.comp) {
    const auto& comp = *G.comp;
    bool ok = true;
    for (std::size_t q = 0; q < dimE; ++q) {
      DForm lhs = pullback(comp.mult, omega[q]);
      DForm rhs = pullback(comp.pr_left, omega[q]);
      if (comp.action) {
        for (std::size_t w = 0; w < dimE; ++w) {
          const RatFn& av = (*comp.action)[q][w];
          if (av.is_zero()) continue;
          rhs = rhs + pullback(comp.pr_right, omega[w]) * av;
        }
      } else {
        rhs = rhs + pullback(comp.pr_right, omega[q]);
      }
      if (!lhs.eq(rhs)) ok = false;
    }
    rep.multiplicative = ok;
  }
  return rep;
}

AlmostCartanAlgebroid build_cartan_algebroid(
    const ChartPtr& base, const FramedAlgebroid& A_alg, const FramedAlgebroid& E_alg,
    const MatRF& l, const SpencerTable& D, const MatRF& xi,
    const std::vector<VecRF>& sigma_frame, const MatRF& frame) {
  const std::size_t n = base->dim();
  const std::size_t dimA = A_alg.rank();
  const std::size_t dimE = E_alg.rank();
  const std::size_t r = frame.size();
  if (r != n + dimE) throw DimensionError("user frame must have rank n + dimE");
  for (const auto& row : frame)
    if (row.size() != n + dimE) throw DimensionError("user frame must be square");

  // D on sections of A with function coefficients
  auto D_section = [&](std::size_t b, const VecRF& sec) {
    VecRF out(dimE, RatFn::zero(base));
    for (std::size_t c = 0; c < dimA; ++c) {
      if (!sec[c].is_zero())
        for (std::size_t q = 0; q < dimE; ++q)
          out[q] = out[q] + sec[c] * D.D[b][c][q];
      RatFn df = sec[c].deriv(b);
      if (!df.is_zero())
        for (std::size_t q = 0; q < dimE; ++q) out[q] = out[q] + df * l[q][c];
    }
    return out;
  };
  auto xi_of = [&](std::size_t i) {
    VecRF v;
    for (std::size_t c = 0; c < dimA; ++c) v.push_back(xi[c][i]);
    return v;
  };
  // nabla^xi_{d/dx_b}(eps_i)
  auto nabla = [&](std::size_t b, std::size_t i) { return D_section(b, xi_of(i)); };

  // canonical C-frame: (d/dx_a, eps_i); structure from nabla and the torsion
  MatRF rho_can = mat_zero(base, n, n + dimE);
  for (std::size_t a = 0; a < n; ++a) rho_can[a][a] = RatFn::one(base);
  FramedAlgebroid Ccan(base, n + dimE, std::move(rho_can));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t i = 0; i < dimE; ++i) {
      VecRF nb = nabla(a, i);
      for (std::size_t q = 0; q < dimE; ++q) Ccan.set_c(n + q, a, n + i, nb[q]);
    }
  for (std::size_t i = 0; i < dimE; ++i)
    for (std::size_t j = i + 1; j < dimE; ++j) {
      // c(eps_i, eps_j) = [eps_i,eps_j]_E - nabla_{rho(eps_i)} eps_j
      //                 + nabla_{rho(eps_j)} eps_i
      VecRF v = E_alg.bracket_frame(i, j);
      VField ri = E_alg.anchor_field(i), rj = E_alg.anchor_field(j);
      for (std::size_t b = 0; b < n; ++b) {
        if (!ri[b].is_zero()) {
          VecRF nb = nabla(b, j);
          for (std::size_t q = 0; q < dimE; ++q) v[q] = v[q] - ri[b] * nb[q];
        }
        if (!rj[b].is_zero()) {
          VecRF nb = nabla(b, i);
          for (std::size_t q = 0; q < dimE; ++q) v[q] = v[q] + rj[b] * nb[q];
        }
      }
      for (std::size_t q = 0; q < dimE; ++q) Ccan.set_c(n + q, n + i, n + j, v[q]);
    }

  // change to the user frame
  MatRF Ft = mat_zero(base, n + dimE, r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < n + dimE; ++j) Ft[j][i] = frame[i][j];
  MatRF FtInv = inverse(Ft);

  MatRF rho_user = mat_zero(base, n, r);
  for (std::size_t j = 0; j < r; ++j) {
    VField v = Ccan.anchor_of(frame[j]);
    for (std::size_t a = 0; a < n; ++a) rho_user[a][j] = v[a];
  }
  FramedAlgebroid Cuser(base, r, std::move(rho_user));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = i + 1; j < r; ++j) {
      VecRF br = Ccan.bracket_sections(frame[i], frame[j]);
      VecRF coef = mat_apply(FtInv, br);
      for (std::size_t q = 0; q < r; ++q) Cuser.set_c(q, i, j, coef[q]);
    }

  // symbol action in the user frame
  SymbolAction sig(base, r, sigma_frame.size());
  for (std::size_t s = 0; s < sigma_frame.size(); ++s) {
    // sanity: sigma frame element lies in ker l
    for (std::size_t q = 0; q < dimE; ++q) {
      RatFn acc = RatFn::zero(base);
      for (std::size_t c = 0; c < dimA; ++c)
        acc = acc + l[q][c] * sigma_frame[s][c];
      if (!acc.is_zero()) throw Error("sigma frame element is not in ker l");
    }
    for (std::size_t j = 0; j < r; ++j) {
      // argument rho_E(w_j) - v_j as a base vector field
      VField X(base);
      for (std::size_t i = 0; i < dimE; ++i) {
        if (frame[j][n + i].is_zero()) continue;
        X = X + E_alg.anchor_field(i) * frame[j][n + i];
      }
      for (std::size_t a = 0; a < n; ++a) X[a] = X[a] - frame[j][a];
      // value = -D_X(T) in E coordinates
      VecRF val(dimE, RatFn::zero(base));
      for (std::size_t b = 0; b < n; ++b) {
        if (X[b].is_zero()) continue;
        VecRF db = D_section(b, sigma_frame[s]);
        for (std::size_t q = 0; q < dimE; ++q) val[q] = val[q] - X[b] * db[q];
      }
      // canonical C-coordinates (0, val) -> user frame
      VecRF can(n + dimE, RatFn::zero(base));
      for (std::size_t q = 0; q < dimE; ++q) can[n + q] = val[q];
      VecRF coef = mat_apply(FtInv, can);
      for (std::size_t i = 0; i < r; ++i) sig.set_a(s, i, j, coef[i]);
    }
  }
  return AlmostCartanAlgebroid(std::move(Cuser), std::move(sig));
}

SftResult sft_pipeline(const SftInput& in) {
  const unsigned n = in.n, k = in.k;
  if (k < 1) throw DimensionError("sft_pipeline: k must be >= 1");
  ChartPtr base = in.base;
  GroupoidChart Gk = in.embedding ? jet_subgroupoid(n, k, *in.embedding, base)
                                  : jet_groupoid(n, k);
  if (!base) base = Gk.base;
  GroupoidChart Gk1 = jet_groupoid(n, k - 1);

  std::vector<DForm> omega = groupoid_cartan_form(Gk, n, k, in.embedding);
  FramedAlgebroid A_alg = algebroid_from_groupoid(Gk);
  FramedAlgebroid E_alg = algebroid_from_groupoid(Gk1);
  const std::size_t dimA = A_alg.rank(), dimE = E_alg.rank();

  // E_alg lives over the plain jet base; rebuild it over the user base so
  // nonvanishing declarations carry over
  if (!compatible(E_alg.base(), base)) {
    MatRF rho = mat_zero(base, base->dim(), dimE);
    VecRF vals = chart_vars(base);
    for (std::size_t a = 0; a < base->dim(); ++a)
      for (std::size_t c = 0; c < dimE; ++c)
        rho[a][c] = E_alg.anchor()[a][c].subst(vals);
    FramedAlgebroid E2(base, dimE, std::move(rho));
    for (std::size_t i = 0; i < dimE; ++i)
      for (std::size_t j = 0; j < dimE; ++j)
        for (std::size_t kk = j + 1; kk < dimE; ++kk)
          E2.set_c(i, j, kk, E_alg.c(i, j, kk).subst(vals));
    E_alg = std::move(E2);
  }
  {  // same for A_alg
    if (!compatible(A_alg.base(), base)) {
      MatRF rho = mat_zero(base, base->dim(), dimA);
      VecRF vals = chart_vars(base);
      for (std::size_t a = 0; a < base->dim(); ++a)
        for (std::size_t c = 0; c < dimA; ++c)
          rho[a][c] = A_alg.anchor()[a][c].subst(vals);
      FramedAlgebroid A2(base, dimA, std::move(rho));
      for (std::size_t i = 0; i < dimA; ++i)
        for (std::size_t j = 0; j < dimA; ++j)
          for (std::size_t kk = j + 1; kk < dimA; ++kk)
            A2.set_c(i, j, kk, A_alg.c(i, j, kk).subst(vals));
      A_alg = std::move(A2);
    }
  }

  // l = omega |_A at units
  MatRF l = mat_zero(base, dimE, dimA);
  for (std::size_t q = 0; q < dimE; ++q)
    for (std::size_t c = 0; c < dimA; ++c)
      l[q][c] = Gk.at_units(
          omega[q].coeff({static_cast<std::uint32_t>(Gk.vertical[c])}));

  SpencerTable D = spencer_from_cartanform(Gk, omega);
  // re-express D over the user base
  {
    VecRF vals = chart_vars(base);
    for (auto& per_b : D.D)
      for (auto& vec : per_b)
        for (auto& e : vec) e = e.subst(vals);
  }

  MatRF xi;
  if (in.xi) {
    xi = *in.xi;
  } else {
    xi = mat_zero(base, dimA, dimE);
    for (std::size_t q = 0; q < dimE; ++q) {
      VecRF rhs(dimE, RatFn::zero(base));
      rhs[q] = RatFn::one(base);
      LinearSolution s = solve_linear(l, rhs);
      if (!s.sat) throw Error("l admits no splitting");
      for (std::size_t c = 0; c < dimA; ++c) xi[c][q] = s.particular[c];
    }
  }
  // verify l o xi = id
  for (std::size_t q = 0; q < dimE; ++q)
    for (std::size_t w = 0; w < dimE; ++w) {
      RatFn acc = RatFn::zero(base);
      for (std::size_t c = 0; c < dimA; ++c) acc = acc + l[q][c] * xi[c][w];
      if (!acc.eq(RatFn::constant(base, q == w ? 1 : 0)))
        throw Error("xi is not a splitting of l");
    }

  std::vector<VecRF> sigma_frame;
  if (in.sigma_frame)
    sigma_frame = *in.sigma_frame;
  else
    sigma_frame = nullspace(l);

  AlmostCartanAlgebroid data =
      build_cartan_algebroid(base, A_alg, E_alg, l, D, xi, sigma_frame, in.frame);

  // realization: reorder the total chart with the target slots first
  std::vector<std::size_t> tslots;
  for (unsigned i = 0; i < n; ++i) {
    const RatFn& c = Gk.tgt.components()[i];
    bool found = false;
    for (std::size_t v = 0; v < Gk.total->dim(); ++v)
      if (c.identical(RatFn::variable(Gk.total, v))) {
        tslots.push_back(v);
        found = true;
        break;
      }
    if (!found) throw Error("target map must be a coordinate projection");
  }
  std::vector<std::size_t> perm = tslots;  // new order: targets, then the rest
  for (std::size_t v = 0; v < Gk.total->dim(); ++v)
    if (std::find(tslots.begin(), tslots.end(), v) == tslots.end())
      perm.push_back(v);
  std::vector<std::string> pnames;
  for (auto v : perm) pnames.push_back(Gk.total->var(v));
  std::vector<Poly> pnv;
  {
    ChartPtr plain = Chart::make(pnames);
    VecRF sub(Gk.total->dim(), RatFn::zero(plain));
    for (std::size_t q = 0; q < perm.size(); ++q)
      sub[perm[q]] = RatFn::variable(plain, q);
    for (const auto& c : Gk.total->nonvanishing())
      pnv.push_back(RatFn(c).subst(sub).num());
  }
  ChartPtr P = Chart::make_with(pnames, std::move(pnv));
  VecRF to_P(Gk.total->dim(), RatFn::zero(P));
  for (std::size_t q = 0; q < perm.size(); ++q)
    to_P[perm[q]] = RatFn::variable(P, q);

  auto form_to_P = [&](const DForm& w) {
    DForm f(P, 1);
    for (const auto& [m, c] : w.terms()) {
      std::size_t q = 0;
      while (perm[q] != m[0]) ++q;
      f.add_term({static_cast<std::uint32_t>(q)}, c.subst(to_P));
    }
    return f;
  };

  // Omega in the canonical frame: (d target_a, omega_q), then user frame
  std::vector<DForm> Omega_can;
  for (unsigned a = 0; a < n; ++a) Omega_can.push_back(DForm::d_var(P, a));
  for (const auto& w : omega) Omega_can.push_back(form_to_P(w));
  MatRF Ft = mat_zero(base, n + dimE, in.frame.size());
  for (std::size_t i = 0; i < in.frame.size(); ++i)
    for (std::size_t j = 0; j < n + dimE; ++j) Ft[j][i] = in.frame[i][j];
  MatRF FtInv = inverse(Ft);
  VecRF base_to_P;
  for (unsigned a = 0; a < n; ++a) base_to_P.push_back(RatFn::variable(P, a));
  std::vector<DForm> omega_user;
  for (std::size_t i = 0; i < in.frame.size(); ++i) {
    DForm f(P, 1);
    for (std::size_t j = 0; j < n + dimE; ++j) {
      const RatFn& cij = FtInv[i][j];
      if (cij.is_zero()) continue;
      f = f + Omega_can[j] * cij.subst(base_to_P);
    }
    omega_user.push_back(std::move(f));
  }
  RealizationData R(P, data, omega_user);
  PiSolution ps = solve_pi(R);
  if (ps.sat) R.pi = ps.pi;

  CartanDataCertificate cert = cartan_data_solve(data);
  LpgReport lpg = lpg_axiom_check(Gk, omega);

  return SftResult{std::move(Gk), std::move(Gk1), std::move(omega),
                   std::move(A_alg), std::move(E_alg), std::move(l),
                   std::move(D), std::move(data), std::move(R), std::move(ps),
                   std::move(cert), std::move(lpg)};
}

}  // namespace cartan
