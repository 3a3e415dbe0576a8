#include "cartan/realization.hpp"

#include <algorithm>

#include "cartan/errors.hpp"

namespace cartan {

RealizationData::RealizationData(ChartPtr t, AlmostCartanAlgebroid d,
                                 std::vector<DForm> om)
    : total(std::move(t)), data(std::move(d)), omega(std::move(om)) {
  if (base_dim() > total->dim())
    throw DimensionError("base dimension exceeds total dimension");
  if (omega.size() != data.C.rank())
    throw DimensionError("omega count != rank");
  for (const auto& w : omega) {
    require_compatible(w.chart(), total, "RealizationData omega");
    if (w.degree() != 1) throw DimensionError("omega components must be 1-forms");
  }
}

RatFn RealizationData::pull_base(const RatFn& f) const {
  if (base_dim() == 0) return RatFn::constant(total, f.constant_value());
  VecRF vals;
  for (std::size_t a = 0; a < base_dim(); ++a)
    vals.push_back(RatFn::variable(total, a));
  return f.subst(vals);
}

MatRF RealizationData::coframe_matrix() const {
  const std::size_t N = total->dim();
  std::vector<const std::vector<DForm>*> groups{&omega};
  if (pi) groups.push_back(&*pi);
  MatRF M;
  for (const auto* g : groups)
    for (const auto& w : *g) {
      VecRF row(N, RatFn::zero(total));
      for (const auto& [m, c] : w.terms()) row[m[0]] = c;
      M.push_back(std::move(row));
    }
  return M;
}

std::vector<DForm> RealizationData::residuals() const {
  if (!pi) throw Error("residuals: pi is required");
  const std::size_t r = data.C.rank(), p = data.sigma.p();
  std::vector<DForm> out;
  for (std::size_t i = 0; i < r; ++i) {
    DForm res = dext(omega[i]);
    for (std::size_t j = 0; j < r; ++j)
      for (std::size_t k = j + 1; k < r; ++k) {
        const RatFn& cv = data.C.c(i, j, k);
        if (cv.is_zero()) continue;
        // (1/2) c_i^{jk} omega_j ^ omega_k summed over ordered pairs
        res = res + wedge(omega[j], omega[k]) * pull_base(cv);
      }
    for (std::size_t l = 0; l < p; ++l)
      for (std::size_t j = 0; j < r; ++j) {
        const RatFn& av = data.sigma.a(l, i, j);
        if (av.is_zero()) continue;
        res = res - wedge((*pi)[l], omega[j]) * pull_base(av);
      }
    out.push_back(std::move(res));
  }
  return out;
}

RealizationReport check_realization(const RealizationData& R) {
  RealizationReport rep;
  auto anchored = R.data.C.anchored_indices();
  for (std::size_t j = 0; j < R.data.C.rank(); ++j) {
    if (!anchored[j]) continue;
    DForm expect = DForm::d_var(R.total, *anchored[j]);
    if (!R.omega[j].eq(expect)) {
      rep.anchored = false;
      rep.anchored_failures.push_back(j);
    }
  }
  if (R.omega.size() + (R.pi ? R.pi->size() : 0) != R.total->dim()) {
    rep.coframe = false;
    rep.coframe_witness = RatFn::zero(R.total);
  } else {
    CoframeReport cf;
    MatRF M = R.coframe_matrix();
    rep.coframe_witness = det(M);
    rep.coframe = !rep.coframe_witness.is_zero();
  }
  auto res = R.residuals();
  for (std::size_t i = 0; i < res.size(); ++i)
    if (!res[i].is_zero()) {
      rep.equations = false;
      rep.residual_failures.emplace_back(i, res[i]);
    }
  return rep;
}

PiSolution solve_pi(const RealizationData& R) {
  PiSolution out;
  const std::size_t r = R.data.C.rank(), p = R.data.sigma.p();
  const std::size_t N = R.total->dim();
  const ChartPtr& P = R.total;

  // base 2-form part: d omega_i + (1/2) c omega omega
  std::vector<DForm> base_part;
  for (std::size_t i = 0; i < r; ++i) {
    DForm b = dext(R.omega[i]);
    for (std::size_t j = 0; j < r; ++j)
      for (std::size_t k = j + 1; k < r; ++k) {
        const RatFn& cv = R.data.C.c(i, j, k);
        if (cv.is_zero()) continue;
        b = b + wedge(R.omega[j], R.omega[k]) * R.pull_base(cv);
      }
    base_part.push_back(std::move(b));
  }

  // unknowns P[l][m]: pi_l = sum_m P[l][m] d x_m
  const std::size_t unknowns = p * N;
  MatRF A;
  VecRF rhs;
  auto tuples2 = increasing_tuples(N, 2);
  for (std::size_t i = 0; i < r; ++i) {
    // a-term coefficient at (m1<m2): sum_l,j a_i^{lj} (P[l][m1] wj[m2] - P[l][m2] wj[m1])
    for (const auto& t2 : tuples2) {
      std::size_t m1 = t2[0], m2 = t2[1];
      VecRF row(unknowns, RatFn::zero(P));
      for (std::size_t l = 0; l < p; ++l)
        for (std::size_t j = 0; j < r; ++j) {
          const RatFn& av = R.data.sigma.a(l, i, j);
          if (av.is_zero()) continue;
          RatFn pav = R.pull_base(av);
          RatFn w1 = R.omega[j].coeff({static_cast<std::uint32_t>(m1)});
          RatFn w2 = R.omega[j].coeff({static_cast<std::uint32_t>(m2)});
          if (!w2.is_zero()) row[l * N + m1] = row[l * N + m1] + pav * w2;
          if (!w1.is_zero()) row[l * N + m2] = row[l * N + m2] - pav * w1;
        }
      A.push_back(std::move(row));
      rhs.push_back(base_part[i].coeff(
          {static_cast<std::uint32_t>(m1), static_cast<std::uint32_t>(m2)}));
    }
  }
  LinearSolution s = solve_linear(A, rhs, P, unknowns);
  out.sat = s.sat;
  if (!s.sat) return out;

  auto to_forms = [&](const VecRF& flat) {
    std::vector<DForm> forms;
    for (std::size_t l = 0; l < p; ++l) {
      DForm f(P, 1);
      for (std::size_t m = 0; m < N; ++m)
        f.add_term({static_cast<std::uint32_t>(m)}, flat[l * N + m]);
      forms.push_back(std::move(f));
    }
    return forms;
  };
  out.pi = to_forms(s.particular);
  out.family_dim = s.nullspace.size();
  for (const auto& v : s.nullspace) out.family_basis.push_back(to_forms(v));

  ProlongTower tower(R.data.symbol_tableau());
  out.sigma1_dim = tower.level_dim(1);

  RealizationData full = R;
  full.pi = out.pi;
  if (full.omega.size() + p == N) {
    MatRF M = full.coframe_matrix();
    out.coframe_ok = !det(M).is_zero();
  }
  return out;
}

namespace {

std::vector<VField> invert_coframe(const RealizationData& R) {
  MatRF M = R.coframe_matrix();
  if (M.size() != R.total->dim())
    throw DimensionError("coframe matrix is not square");
  MatRF inv = inverse(M);
  std::vector<VField> out;
  for (std::size_t c = 0; c < M.size(); ++c) {
    VField X(R.total);
    for (std::size_t m = 0; m < R.total->dim(); ++m) X[m] = inv[m][c];
    out.push_back(std::move(X));
  }
  return out;
}

}  // namespace

DualFrame dual_frame(const RealizationData& R) {
  if (!R.pi) throw Error("dual_frame: pi is required");
  const std::size_t r = R.data.C.rank(), p = R.data.sigma.p();
  DualFrame df;
  auto all = invert_coframe(R);
  df.X_frame.assign(all.begin(), all.begin() + r);
  df.X_sigma.assign(all.begin() + r, all.end());

  auto omega_of = [&](const VField& X) {
    VecRF v;
    for (std::size_t i = 0; i < r; ++i) v.push_back(pair(R.omega[i], X));
    return v;
  };
  // Omega([X_i, X_j]) = I^* [e^i, e^j]
  for (std::size_t i = 0; i < r && df.lemma_identities_ok; ++i)
    for (std::size_t j = i + 1; j < r; ++j) {
      VecRF got = omega_of(lie_bracket(df.X_frame[i], df.X_frame[j]));
      for (std::size_t k = 0; k < r; ++k)
        if (!got[k].eq(R.pull_base(R.data.C.c(k, i, j)))) {
          df.lemma_identities_ok = false;
          break;
        }
    }
  // Omega([X_i, X_S]) = I^* S(e^i)
  for (std::size_t i = 0; i < r && df.lemma_identities_ok; ++i)
    for (std::size_t l = 0; l < p; ++l) {
      VecRF got = omega_of(lie_bracket(df.X_frame[i], df.X_sigma[l]));
      for (std::size_t k = 0; k < r; ++k)
        if (!got[k].eq(R.pull_base(R.data.sigma.a(l, k, i)))) {
          df.lemma_identities_ok = false;
          break;
        }
    }
  // Omega([X_S, X_T]) = 0
  for (std::size_t l = 0; l < p && df.lemma_identities_ok; ++l)
    for (std::size_t m = l + 1; m < p; ++m) {
      VecRF got = omega_of(lie_bracket(df.X_sigma[l], df.X_sigma[m]));
      for (std::size_t k = 0; k < r; ++k)
        if (!got[k].is_zero()) {
          df.lemma_identities_ok = false;
          break;
        }
    }
  if (p >= 1) {
    FrobeniusReport fr = frobenius_involutive(df.X_sigma);
    df.kernel_involutive = fr.involutive;
  }
  return df;
}

SystaticDistribution systatic_distribution(const RealizationData& R) {
  if (!R.pi) throw Error("systatic_distribution: pi is required");
  const std::size_t r = R.data.C.rank(), p = R.data.sigma.p();
  const ChartPtr& P = R.total;
  SystaticDistribution out(systatic_build(R.data));
  DualFrame df = dual_frame(R);
  out.s0_rank = out.build.s0_basis.size();

  // action fields X_u = sum_i (u_i o I) X_{e^i}, then the X_S
  for (const auto& u : out.build.s0_basis) {
    VField X(P);
    for (std::size_t i = 0; i < r; ++i) {
      if (u[i].is_zero()) continue;
      X = X + df.X_frame[i] * R.pull_base(u[i]);
    }
    out.action_fields.push_back(std::move(X));
  }
  for (const auto& XS : df.X_sigma) out.action_fields.push_back(XS);

  // image = {X : Omega(X) in S0}: constraints sum_j a_i^{lj} omega_j(X) = 0
  MatRF constraints;
  for (std::size_t l = 0; l < p; ++l)
    for (std::size_t i = 0; i < r; ++i) {
      VecRF row(P->dim(), RatFn::zero(P));
      bool nonzero = false;
      for (std::size_t j = 0; j < r; ++j) {
        const RatFn& av = R.data.sigma.a(l, i, j);
        if (av.is_zero()) continue;
        RatFn pav = R.pull_base(av);
        for (const auto& [m, c] : R.omega[j].terms()) {
          row[m[0]] = row[m[0]] + pav * c;
          nonzero = true;
        }
      }
      if (nonzero) constraints.push_back(std::move(row));
    }
  MatRF span;
  for (const auto& X : out.action_fields) span.push_back(X.coeffs());
  std::size_t span_rank = span.empty() ? 0 : rank(span);
  std::size_t preimage_dim =
      P->dim() - (constraints.empty() ? 0 : rank(constraints));
  bool contained = true;
  for (const auto& X : out.action_fields)
    for (const auto& row : constraints) {
      RatFn acc = RatFn::zero(P);
      for (std::size_t m = 0; m < row.size(); ++m) acc = acc + row[m] * X[m];
      if (!acc.is_zero()) contained = false;
    }
  out.image_matches_preimage = contained && span_rank == preimage_dim;

  if (!out.action_fields.empty())
    out.involutive = frobenius_involutive(out.action_fields).involutive;
  else
    out.involutive = true;

  // annihilator comparison: constraints rows ARE the systatic-system forms;
  // they must cut exactly the span
  out.annihilator_matches =
      contained &&
      (constraints.empty() ? span_rank == P->dim()
                           : rank(constraints) + span_rank == P->dim());

  // pi-independence of the X_u: recompute with another family member
  PiSolution ps = solve_pi(RealizationData(R.total, R.data, R.omega));
  if (ps.sat && ps.family_dim > 0) {
    RealizationData R2(R.total, R.data, R.omega);
    std::vector<DForm> pi2 = ps.pi;
    for (std::size_t l = 0; l < pi2.size(); ++l)
      pi2[l] = pi2[l] + ps.family_basis[0][l];
    R2.pi = pi2;
    DualFrame df2 = dual_frame(R2);
    for (std::size_t b = 0; b < out.build.s0_basis.size(); ++b) {
      VField X2(P);
      for (std::size_t i = 0; i < r; ++i) {
        if (out.build.s0_basis[b][i].is_zero()) continue;
        X2 = X2 + df2.X_frame[i] * R.pull_base(out.build.s0_basis[b][i]);
      }
      if (!X2.eq(out.action_fields[b])) out.pi_independent = false;
    }
  }
  return out;
}

RealizationData restrict_transversal(
    const RealizationData& R,
    const std::vector<std::pair<std::string, Rat>>& assignments) {
  const std::size_t n = R.base_dim();
  std::vector<std::pair<std::size_t, Rat>> base_assign;
  std::vector<bool> assigned_total(R.total->dim(), false);
  std::vector<Rat> assigned_val(R.total->dim(), Rat(0));
  for (const auto& [name, val] : assignments) {
    std::size_t v = R.total->index_of_checked(name);
    if (v >= n) throw SchemaError("assigned coordinate is not a base coordinate: " + name);
    base_assign.emplace_back(v, val);
    assigned_total[v] = true;
    assigned_val[v] = val;
  }
  if (base_assign.empty()) return R;

  AlgebroidRestriction ar = restrict_algebroid(R.data, base_assign);

  // new total chart: drop assigned coordinates
  std::vector<std::string> names;
  std::vector<std::size_t> keep;
  for (std::size_t v = 0; v < R.total->dim(); ++v)
    if (!assigned_total[v]) {
      names.push_back(R.total->var(v));
      keep.push_back(v);
    }
  // carry over surviving nonvanishing constraints
  ChartPtr slice_plain = Chart::make(names);
  VecRF sub(R.total->dim(), RatFn::zero(slice_plain));
  for (std::size_t v = 0; v < R.total->dim(); ++v)
    if (assigned_total[v]) sub[v] = RatFn::constant(slice_plain, assigned_val[v]);
  for (std::size_t q = 0; q < keep.size(); ++q)
    sub[keep[q]] = RatFn::variable(slice_plain, q);
  std::vector<Poly> nv;
  for (const auto& c : R.total->nonvanishing()) {
    RatFn res = RatFn(c).subst(sub);
    if (res.is_zero())
      throw EvalError("restriction hits a nonvanishing constraint: " + c.str());
    if (!res.num().is_constant()) nv.push_back(res.num());
  }
  ChartPtr slice = Chart::make_with(names, std::move(nv));
  VecRF sub2(R.total->dim(), RatFn::zero(slice));
  for (std::size_t v = 0; v < R.total->dim(); ++v)
    if (assigned_total[v]) sub2[v] = RatFn::constant(slice, assigned_val[v]);
  for (std::size_t q = 0; q < keep.size(); ++q)
    sub2[keep[q]] = RatFn::variable(slice, q);

  auto restrict_form = [&](const DForm& w) {
    DForm out(slice, 1);
    for (const auto& [m, c] : w.terms()) {
      std::size_t src = m[0];
      if (assigned_total[src]) continue;  // d(const) = 0
      std::size_t q = 0;
      while (keep[q] != src) ++q;
      out.add_term({static_cast<std::uint32_t>(q)}, c.subst(sub2));
    }
    return out;
  };

  std::vector<DForm> om;
  for (auto j : ar.kept_frame) om.push_back(restrict_form(R.omega[j]));
  RealizationData out(slice, ar.data, std::move(om));
  if (R.pi) {
    std::vector<DForm> pi;
    for (const auto& w : *R.pi) pi.push_back(restrict_form(w));
    out.pi = std::move(pi);
  }
  return out;
}

bool check_symmetry(const RatMap& phi, const RealizationData& R) {
  require_compatible(phi.source(), R.total, "check_symmetry");
  require_compatible(phi.target(), R.total, "check_symmetry");
  for (std::size_t a = 0; a < R.base_dim(); ++a)
    if (!phi.components()[a].eq(RatFn::variable(R.total, a))) return false;
  for (const auto& w : R.omega)
    if (!pullback(phi, w).eq(w)) return false;
  return true;
}

bool check_symmetry(const RatMap& phi, const RatMap& phi_inv,
                    const RealizationData& R) {
  if (!phi.is_inverse(phi_inv)) throw Error("check_symmetry: inverse verification failed");
  return check_symmetry(phi, R);
}

InvarianceReport check_systatic_invariance(const RatMap& phi,
                                           const RealizationData& R) {
  InvarianceReport rep;
  rep.symmetry = check_symmetry(phi, R);
  if (!rep.symmetry) return rep;
  SystaticDistribution sd = systatic_distribution(R);
  rep.all_fixed = true;
  for (std::size_t i = 0; i < sd.action_fields.size(); ++i) {
    if (!is_related(phi, sd.action_fields[i], sd.action_fields[i])) {
      rep.all_fixed = false;
      rep.moved.push_back(i);
    }
  }
  return rep;
}

InvarianceReport check_systatic_invariance(const RatMap& phi, const RatMap& phi_inv,
                                           const RealizationData& R) {
  if (!phi.is_inverse(phi_inv)) throw Error("invariance: inverse verification failed");
  return check_systatic_invariance(phi, R);
}

PfaffianLift pfaffian_lift(const RealizationData& R) {
  if (!R.pi) throw Error("pfaffian_lift: pi is required");
  PfaffianLift out;
  const std::size_t n = R.base_dim();
  const std::size_t N = R.total->dim();
  const std::size_t r = R.data.C.rank(), p = R.data.sigma.p();

  // doubled chart (base, fiber, fiber')
  std::vector<std::string> names;
  for (std::size_t v = 0; v < N; ++v) names.push_back(R.total->var(v));
  for (std::size_t v = n; v < N; ++v) names.push_back(R.total->var(v) + "_r");
  std::vector<Poly> nv;
  {
    ChartPtr plain = Chart::make(names);
    VecRF t_side(N, RatFn::zero(plain)), s_side(N, RatFn::zero(plain));
    for (std::size_t v = 0; v < N; ++v) t_side[v] = RatFn::variable(plain, v);
    for (std::size_t v = 0; v < n; ++v) s_side[v] = RatFn::variable(plain, v);
    for (std::size_t v = n; v < N; ++v)
      s_side[v] = RatFn::variable(plain, N + (v - n));
    for (const auto& c : R.total->nonvanishing()) {
      nv.push_back(RatFn(c).subst(t_side).num());
      nv.push_back(RatFn(c).subst(s_side).num());
    }
  }
  ChartPtr D = Chart::make_with(names, std::move(nv));
  out.doubled = D;
  VecRF t_side(N, RatFn::zero(D)), s_side(N, RatFn::zero(D));
  for (std::size_t v = 0; v < N; ++v) t_side[v] = RatFn::variable(D, v);
  for (std::size_t v = 0; v < n; ++v) s_side[v] = RatFn::variable(D, v);
  for (std::size_t v = n; v < N; ++v) s_side[v] = RatFn::variable(D, N + (v - n));

  // lift a form on P to the doubled chart through a substitution side;
  // side=true : t-side (fiber vars), false : s-side (fiber' vars)
  auto lift_form = [&](const DForm& w, bool tside) {
    const VecRF& sub = tside ? t_side : s_side;
    DForm f(D, 1);
    for (const auto& [m, c] : w.terms()) {
      std::size_t src = m[0];
      std::size_t dst = src < n ? src : (tside ? src : N + (src - n));
      f.add_term({static_cast<std::uint32_t>(dst)}, c.subst(sub));
    }
    return f;
  };
  auto lift_field = [&](const VField& X) {
    // diagonal lift: base components shared, fiber components on both sides
    VField Y(D);
    for (std::size_t v = 0; v < n; ++v) Y[v] = X[v].subst(t_side);
    for (std::size_t v = n; v < N; ++v) {
      Y[v] = X[v].subst(t_side);
      Y[N + (v - n)] = X[v].subst(s_side);
    }
    return Y;
  };
  auto lift_field_one_side = [&](const VField& X, bool tside) {
    VField Y(D);
    const VecRF& sub = tside ? t_side : s_side;
    for (std::size_t v = 0; v < n; ++v) {
      RatFn bc = X[v].subst(sub);
      if (!bc.is_zero()) throw Error("one-sided lift of a non-vertical field");
      Y[v] = bc;
    }
    for (std::size_t v = n; v < N; ++v) {
      RatFn c = X[v].subst(sub);
      if (tside)
        Y[v] = c;
      else
        Y[N + (v - n)] = c;
    }
    return Y;
  };

  auto anchored = R.data.C.anchored_indices();
  for (std::size_t i = 0; i < r; ++i)
    if (!anchored[i]) out.e_frame.push_back(i);

  for (auto i : out.e_frame)
    out.theta.push_back(lift_form(R.omega[i], false) - lift_form(R.omega[i], true));

  SystaticDistribution sd = systatic_distribution(R);
  const std::size_t s0n = sd.build.s0_basis.size();

  // horizontality
  out.horizontal = true;
  for (const auto& X : sd.action_fields) {
    VField diag = lift_field(X);
    for (const auto& th : out.theta)
      if (!pair(th, diag).is_zero()) out.horizontal = false;
  }

  // nabla_{(u,S)} on E-sections over the base: coefficients in the E frame
  const ChartPtr& base = R.data.C.base();
  auto e_pos = [&](std::size_t frame_idx) {
    std::size_t q = 0;
    while (out.e_frame[q] != frame_idx) ++q;
    return q;
  };
  // nabla applied to E frame element e^j (frame index), returning E coeffs
  auto nabla = [&](std::size_t b, std::size_t l, bool is_sigma, std::size_t j) {
    VecRF full(r, RatFn::zero(base));
    if (!is_sigma) {
      VecRF ej(r, RatFn::zero(base));
      ej[j] = RatFn::one(base);
      full = R.data.C.bracket_sections(sd.build.s0_basis[b], ej);
    } else {
      for (std::size_t i = 0; i < r; ++i) full[i] = -R.data.sigma.a(l, i, j);
    }
    VecRF e(out.e_frame.size(), RatFn::zero(base));
    for (std::size_t i = 0; i < r; ++i) {
      if (full[i].is_zero()) continue;
      if (anchored[i]) throw Error("nabla leaves ker rho");
      e[e_pos(i)] = full[i];
    }
    return e;
  };

  // equivariance: theta([a(alpha), Y]) = (pi^* nabla)_{pi^* alpha} theta(Y)
  // for alpha over the systatic basis and Y over a generating family.
  std::vector<VField> gens;
  {
    DualFrame df = dual_frame(R);
    for (std::size_t i = 0; i < r; ++i) {
      if (anchored[i])
        gens.push_back(lift_field(df.X_frame[i]));
      else {
        gens.push_back(lift_field_one_side(df.X_frame[i], true));
        gens.push_back(lift_field_one_side(df.X_frame[i], false));
      }
    }
    for (std::size_t l = 0; l < p; ++l) {
      gens.push_back(lift_field_one_side(df.X_sigma[l], true));
      gens.push_back(lift_field_one_side(df.X_sigma[l], false));
    }
  }
  VecRF base_lift;
  for (std::size_t a = 0; a < n; ++a) base_lift.push_back(RatFn::variable(D, a));
  auto pull_base_D = [&](const RatFn& f) {
    if (n == 0) return RatFn::constant(D, f.constant_value());
    return f.subst(base_lift);
  };

  out.equivariant = true;
  for (std::size_t al = 0; al < s0n + p; ++al) {
    bool is_sigma = al >= s0n;
    VField aX = lift_field(sd.action_fields[al]);
    for (const auto& Y : gens) {
      for (std::size_t q = 0; q < out.e_frame.size(); ++q) {
        // LHS component q of theta([aX, Y])
        RatFn lhs = pair(out.theta[q], lie_bracket(aX, Y));
        // RHS: aX(theta_q(Y)) + sum over frame of theta(Y)_w * nabla-coeff
        RatFn rhs = aX.apply(pair(out.theta[q], Y));
        for (std::size_t w = 0; w < out.e_frame.size(); ++w) {
          RatFn gw = pair(out.theta[w], Y);
          if (gw.is_zero()) continue;
          VecRF nb = nabla(is_sigma ? 0 : al, is_sigma ? al - s0n : 0, is_sigma,
                           out.e_frame[w]);
          if (!nb[q].is_zero()) rhs = rhs + gw * pull_base_D(nb[q]);
        }
        if (!lhs.eq(rhs)) out.equivariant = false;
      }
    }
  }

  // flatness of nabla as an S-connection, on the E frame
  out.connection_flat = true;
  const FramedAlgebroid& S = sd.build.S;
  auto nabla_section = [&](std::size_t sb, const VecRF& e_sec) {
    // sb-th systatic frame element applied to an E-coefficient section
    VecRF outv(out.e_frame.size(), RatFn::zero(base));
    bool is_sigma = sb >= s0n;
    VField rho_u(base);
    if (!is_sigma) rho_u = R.data.C.anchor_of(sd.build.s0_basis[sb]);
    for (std::size_t w = 0; w < out.e_frame.size(); ++w) {
      if (e_sec[w].is_zero()) continue;
      VecRF nb = nabla(is_sigma ? 0 : sb, is_sigma ? sb - s0n : 0, is_sigma,
                       out.e_frame[w]);
      for (std::size_t q = 0; q < outv.size(); ++q)
        outv[q] = outv[q] + e_sec[w] * nb[q];
      if (!is_sigma) outv[w] = outv[w] + rho_u.apply(e_sec[w]);
    }
    return outv;
  };
  for (std::size_t a = 0; a < s0n + p && out.connection_flat; ++a)
    for (std::size_t b = a + 1; b < s0n + p && out.connection_flat; ++b)
      for (std::size_t w = 0; w < out.e_frame.size(); ++w) {
        VecRF ew(out.e_frame.size(), RatFn::zero(base));
        ew[w] = RatFn::one(base);
        VecRF r1 = nabla_section(a, nabla_section(b, ew));
        VecRF r2 = nabla_section(b, nabla_section(a, ew));
        // nabla along the S-bracket [f_a, f_b]
        VecRF br = S.bracket_frame(a, b);
        VecRF r3(out.e_frame.size(), RatFn::zero(base));
        for (std::size_t ssb = 0; ssb < s0n + p; ++ssb) {
          if (br[ssb].is_zero()) continue;
          VecRF t = nabla_section(ssb, ew);
          for (std::size_t q = 0; q < r3.size(); ++q)
            r3[q] = r3[q] + br[ssb] * t[q];
        }
        for (std::size_t q = 0; q < r3.size(); ++q)
          if (!(r1[q] - r2[q] - r3[q]).is_zero()) out.connection_flat = false;
      }
  return out;
}

}  // namespace cartan
