#include "cartan/algebroid.hpp"

#include <algorithm>

#include "cartan/errors.hpp"

namespace cartan {

FramedAlgebroid::FramedAlgebroid(ChartPtr base, std::size_t rank, MatRF anchor)
    : base_(std::move(base)), r_(rank), rho_(std::move(anchor)) {
  if (rho_.size() != base_->dim())
    throw DimensionError("anchor row count != base dimension");
  for (const auto& row : rho_)
    if (row.size() != r_) throw DimensionError("anchor column count != rank");
  c_.assign(r_, mat_zero(base_, r_, r_));
}

void FramedAlgebroid::set_c(std::size_t i, std::size_t j, std::size_t k, const RatFn& v) {
  if (i >= r_ || j >= r_ || k >= r_) throw DimensionError("c index out of range");
  if (j == k && !v.is_zero()) throw Error("c must vanish for j == k");
  c_[i][j][k] = v;
  c_[i][k][j] = -v;
}

const RatFn& FramedAlgebroid::c(std::size_t i, std::size_t j, std::size_t k) const {
  return c_[i][j][k];
}

VField FramedAlgebroid::anchor_field(std::size_t j) const {
  VField X(base_);
  for (std::size_t a = 0; a < base_->dim(); ++a) X[a] = rho_[a][j];
  return X;
}

VField FramedAlgebroid::anchor_of(const VecRF& s) const {
  if (s.size() != r_) throw DimensionError("section length != rank");
  VField X(base_);
  for (std::size_t a = 0; a < base_->dim(); ++a) {
    RatFn acc = RatFn::zero(base_);
    for (std::size_t j = 0; j < r_; ++j) {
      if (rho_[a][j].is_zero() || s[j].is_zero()) continue;
      acc = acc + rho_[a][j] * s[j];
    }
    X[a] = acc;
  }
  return X;
}

VecRF FramedAlgebroid::bracket_frame(std::size_t j, std::size_t k) const {
  VecRF out;
  out.reserve(r_);
  for (std::size_t i = 0; i < r_; ++i) out.push_back(c_[i][j][k]);
  return out;
}

VecRF FramedAlgebroid::bracket_sections(const VecRF& a, const VecRF& b) const {
  if (a.size() != r_ || b.size() != r_)
    throw DimensionError("section length != rank");
  VecRF out(r_, RatFn::zero(base_));
  VField Xa = anchor_of(a), Xb = anchor_of(b);
  for (std::size_t i = 0; i < r_; ++i) {
    RatFn acc = RatFn::zero(base_);
    for (std::size_t j = 0; j < r_; ++j) {
      if (a[j].is_zero()) continue;
      for (std::size_t k = 0; k < r_; ++k) {
        if (b[k].is_zero() || c_[i][j][k].is_zero()) continue;
        acc = acc + a[j] * b[k] * c_[i][j][k];
      }
    }
    acc = acc + Xa.apply(b[i]) - Xb.apply(a[i]);
    out[i] = acc;
  }
  return out;
}

std::vector<std::optional<std::size_t>> FramedAlgebroid::anchored_indices() const {
  std::vector<std::optional<std::size_t>> out(r_);
  for (std::size_t j = 0; j < r_; ++j) {
    std::optional<std::size_t> hit;
    bool zero = true;
    for (std::size_t a = 0; a < base_->dim(); ++a) {
      if (rho_[a][j].is_zero()) continue;
      zero = false;
      if (rho_[a][j].eq(RatFn::one(base_)) && !hit)
        hit = a;
      else
        throw Error("anchor is not in the normalized local model");
    }
    if (!zero) out[j] = hit;
  }
  // anchored indices must be distinct
  std::vector<bool> seen(base_->dim(), false);
  for (const auto& h : out)
    if (h) {
      if (seen[*h]) throw Error("two frame elements anchor the same direction");
      seen[*h] = true;
    }
  return out;
}

bool FramedAlgebroid::is_normalized_model() const {
  try {
    auto idx = anchored_indices();
    std::size_t covered = 0;
    for (const auto& h : idx)
      if (h) ++covered;
    return covered == base_->dim();
  } catch (const Error&) {
    return false;
  }
}

RatFn FramedAlgebroid::dframe(std::size_t j, const RatFn& f) const {
  auto idx = anchored_indices();
  if (!idx[j]) return RatFn::zero(base_);
  return f.deriv(*idx[j]);
}

AlmostLieReport check_almost_lie(const FramedAlgebroid& F) {
  AlmostLieReport rep;
  for (std::size_t j = 0; j < F.rank(); ++j)
    for (std::size_t k = j + 1; k < F.rank(); ++k) {
      VField lhs = F.anchor_of(F.bracket_frame(j, k));
      VField rhs = lie_bracket(F.anchor_field(j), F.anchor_field(k));
      VField res = lhs - rhs;
      if (!res.is_zero()) {
        rep.anchor_ok = false;
        rep.anchor_residuals.emplace_back(j, k, res);
      }
    }
  return rep;
}

std::map<std::tuple<std::size_t, std::size_t, std::size_t>, VecRF>
jacobiator(const FramedAlgebroid& F) {
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, VecRF> out;
  const std::size_t r = F.rank();
  auto e = [&](std::size_t i) {
    VecRF v(r, RatFn::zero(F.base()));
    v[i] = RatFn::one(F.base());
    return v;
  };
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = i + 1; j < r; ++j)
      for (std::size_t k = j + 1; k < r; ++k) {
        VecRF jac =
            F.bracket_sections(F.bracket_sections(e(i), e(j)), e(k));
        VecRF t2 = F.bracket_sections(F.bracket_sections(e(j), e(k)), e(i));
        VecRF t3 = F.bracket_sections(F.bracket_sections(e(k), e(i)), e(j));
        for (std::size_t m = 0; m < r; ++m) jac[m] = jac[m] + t2[m] + t3[m];
        out[{i, j, k}] = std::move(jac);
      }
  return out;
}

SymbolAction::SymbolAction(ChartPtr base, std::size_t rank, std::size_t p)
    : base_(std::move(base)), r_(rank), p_(p) {
  A_.assign(p_, mat_zero(base_, r_, r_));
}

void SymbolAction::set_a(std::size_t lambda, std::size_t i, std::size_t j, const RatFn& v) {
  if (lambda >= p_ || i >= r_ || j >= r_) throw DimensionError("a index out of range");
  A_[lambda][i][j] = v;
}

const RatFn& SymbolAction::a(std::size_t lambda, std::size_t i, std::size_t j) const {
  return A_[lambda][i][j];
}

VecRF SymbolAction::apply(std::size_t lambda, const VecRF& s) const {
  return mat_apply(A_[lambda], s);
}

AlmostCartanAlgebroid::AlmostCartanAlgebroid(FramedAlgebroid c, SymbolAction s)
    : C(std::move(c)), sigma(std::move(s)) {
  if (sigma.rank() != C.rank())
    throw DimensionError("symbol action rank != algebroid rank");
}

bool AlmostCartanAlgebroid::check_c0() const {
  auto idx = C.anchored_indices();
  for (std::size_t i = 0; i < C.rank(); ++i) {
    if (!idx[i]) continue;  // only anchored indices constrained
    for (std::size_t j = 0; j < C.rank(); ++j)
      for (std::size_t k = 0; k < C.rank(); ++k)
        if (!C.c(i, j, k).is_zero()) return false;
    for (std::size_t l = 0; l < sigma.p(); ++l)
      for (std::size_t j = 0; j < C.rank(); ++j)
        if (!sigma.a(l, i, j).is_zero()) return false;
  }
  return true;
}

bool AlmostCartanAlgebroid::symbol_independent() const {
  if (sigma.p() == 0) return true;
  MatRF flat;
  for (std::size_t l = 0; l < sigma.p(); ++l) {
    VecRF row;
    for (const auto& r : sigma.matrix(l))
      for (const auto& e : r) row.push_back(e);
    flat.push_back(std::move(row));
  }
  return rank(flat) == sigma.p();
}

bool AlmostCartanAlgebroid::symbol_in_kernel() const {
  for (std::size_t l = 0; l < sigma.p(); ++l)
    for (std::size_t j = 0; j < C.rank(); ++j) {
      VecRF col(C.rank(), RatFn::zero(C.base()));
      for (std::size_t i = 0; i < C.rank(); ++i) col[i] = sigma.a(l, i, j);
      if (!C.anchor_of(col).is_zero()) return false;
    }
  return true;
}

Tableau AlmostCartanAlgebroid::symbol_tableau() const {
  std::vector<MatRF> basis;
  for (std::size_t l = 0; l < sigma.p(); ++l) basis.push_back(sigma.matrix(l));
  return Tableau(C.base(), C.rank(), C.rank(), std::move(basis));
}

// ---- (C1)-(C3) -------------------------------------------------------------

namespace {

struct UnknownIndex {
  // enumeration of unknowns as flat columns
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> list;
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::size_t> pos;
  void add(std::size_t a, std::size_t b, std::size_t c) {
    pos[{a, b, c}] = list.size();
    list.emplace_back(a, b, c);
  }
};

}  // namespace

CartanDataCertificate cartan_data_solve(const AlmostCartanAlgebroid& A) {
  const std::size_t r = A.C.rank(), p = A.sigma.p();
  const ChartPtr& base = A.C.base();
  CartanDataCertificate cert;
  if (!A.check_c0()) throw Error("cartan_data_solve requires (C0)");

  auto a = [&](std::size_t l, std::size_t i, std::size_t j) -> const RatFn& {
    return A.sigma.a(l, i, j);
  };
  auto c = [&](std::size_t i, std::size_t j, std::size_t k) -> const RatFn& {
    return A.C.c(i, j, k);
  };
  auto d = [&](std::size_t j, const RatFn& f) { return A.C.dframe(j, f); };

  // (C1): a_i^{eta m} a_m^{mu j} - a_i^{mu m} a_m^{eta j} = a_i^{lambda j} eps_lambda^{eta mu}
  {
    UnknownIndex ux;  // (lambda, eta, mu) with eta < mu
    for (std::size_t l = 0; l < p; ++l)
      for (std::size_t e = 0; e < p; ++e)
        for (std::size_t m = e + 1; m < p; ++m) ux.add(l, e, m);
    MatRF M;
    VecRF rhs;
    for (std::size_t e = 0; e < p; ++e)
      for (std::size_t m = e + 1; m < p; ++m)
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < r; ++j) {
            RatFn lhs = RatFn::zero(base);
            for (std::size_t mm = 0; mm < r; ++mm)
              lhs = lhs + a(e, i, mm) * a(m, mm, j) - a(m, i, mm) * a(e, mm, j);
            VecRF row(ux.list.size(), RatFn::zero(base));
            for (std::size_t l = 0; l < p; ++l)
              row[ux.pos.at({l, e, m})] = a(l, i, j);
            M.push_back(std::move(row));
            rhs.push_back(lhs);
          }
    LinearSolution s = solve_linear(M, rhs, base, ux.list.size());
    cert.c1_sat = s.sat;
    if (!s.sat) {
      cert.c1_unsat_row = s.unsat_row;
    } else {
      cert.eps.assign(p, mat_zero(base, p, p));
      for (std::size_t u = 0; u < ux.list.size(); ++u) {
        auto [l, e, m] = ux.list[u];
        cert.eps[l][e][m] = s.particular[u];
        cert.eps[l][m][e] = -s.particular[u];
      }
    }
  }

  // (C2)
  {
    UnknownIndex ux;  // nu: (lambda, j, k) with j < k
    for (std::size_t l = 0; l < p; ++l)
      for (std::size_t j = 0; j < r; ++j)
        for (std::size_t k = j + 1; k < r; ++k) ux.add(l, j, k);
    auto nu_coeff = [&](VecRF& row, std::size_t l, std::size_t j, std::size_t k,
                        const RatFn& v) {
      if (j == k) return;
      if (j < k)
        row[ux.pos.at({l, j, k})] = row[ux.pos.at({l, j, k})] + v;
      else
        row[ux.pos.at({l, k, j})] = row[ux.pos.at({l, k, j})] - v;
    };
    MatRF M;
    VecRF rhs;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < r; ++j)
        for (std::size_t k = j + 1; k < r; ++k)
          for (std::size_t l = k + 1; l < r; ++l) {
            // Jacobiator components: the frame expansion of
            // [[e_j,e_k],e_l] + cyc = t_{jk}(e_l) + cyc
            RatFn lhs = RatFn::zero(base);
            for (std::size_t m = 0; m < r; ++m)
              lhs = lhs + c(i, m, j) * c(m, k, l) + c(i, m, k) * c(m, l, j) +
                    c(i, m, l) * c(m, j, k);
            lhs = lhs - d(j, c(i, k, l)) - d(k, c(i, l, j)) - d(l, c(i, j, k));
            VecRF row(ux.list.size(), RatFn::zero(base));
            for (std::size_t lam = 0; lam < p; ++lam) {
              nu_coeff(row, lam, j, k, a(lam, i, l));
              nu_coeff(row, lam, l, j, a(lam, i, k));
              nu_coeff(row, lam, k, l, a(lam, i, j));
            }
            M.push_back(std::move(row));
            rhs.push_back(lhs);
          }
    LinearSolution s = solve_linear(M, rhs, base, ux.list.size());
    cert.c2_sat = s.sat;
    if (!s.sat) {
      cert.c2_unsat_row = s.unsat_row;
    } else {
      cert.nu.assign(p, mat_zero(base, r, r));
      for (std::size_t u = 0; u < ux.list.size(); ++u) {
        auto [l, j, k] = ux.list[u];
        cert.nu[l][j][k] = s.particular[u];
        cert.nu[l][k][j] = -s.particular[u];
      }
    }
  }

  // (C3): frame expansion of
  //   T([a,b]) - [T(a),b] - [a,T(b)] = nabla_b(T)(a) - nabla_a(T)(b)
  // with unknowns xi[mu][lambda][j]: nabla_{e_j}(t^mu) = xi[mu][lambda][j] t^lambda
  {
    UnknownIndex ux;  // (mu, lambda, j)
    for (std::size_t m = 0; m < p; ++m)
      for (std::size_t l = 0; l < p; ++l)
        for (std::size_t j = 0; j < r; ++j) ux.add(m, l, j);
    MatRF M;
    VecRF rhs;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t l = 0; l < p; ++l)
        for (std::size_t j = 0; j < r; ++j)
          for (std::size_t k = j + 1; k < r; ++k) {
            RatFn lhs = RatFn::zero(base);
            for (std::size_t m = 0; m < r; ++m)
              lhs = lhs + a(l, i, m) * c(m, j, k) - a(l, m, j) * c(i, m, k) +
                    a(l, m, k) * c(i, m, j);
            lhs = lhs + d(k, a(l, i, j)) - d(j, a(l, i, k));
            VecRF row(ux.list.size(), RatFn::zero(base));
            for (std::size_t mu = 0; mu < p; ++mu) {
              row[ux.pos.at({l, mu, k})] = row[ux.pos.at({l, mu, k})] + a(mu, i, j);
              row[ux.pos.at({l, mu, j})] = row[ux.pos.at({l, mu, j})] - a(mu, i, k);
            }
            M.push_back(std::move(row));
            rhs.push_back(lhs);
          }
    LinearSolution s = solve_linear(M, rhs, base, ux.list.size());
    cert.c3_sat = s.sat;
    if (!s.sat) {
      cert.c3_unsat_row = s.unsat_row;
    } else {
      cert.xi.assign(p, mat_zero(base, p, r));
      for (std::size_t u = 0; u < ux.list.size(); ++u) {
        auto [m, l, j] = ux.list[u];
        cert.xi[m][l][j] = s.particular[u];
      }
    }
  }

  // back-substitution check
  if (cert.sat()) {
    bool ok = true;
    for (std::size_t e = 0; e < p && ok; ++e)
      for (std::size_t m = e + 1; m < p && ok; ++m)
        for (std::size_t i = 0; i < r && ok; ++i)
          for (std::size_t j = 0; j < r; ++j) {
            RatFn lhs = RatFn::zero(base);
            for (std::size_t mm = 0; mm < r; ++mm)
              lhs = lhs + a(e, i, mm) * a(m, mm, j) - a(m, i, mm) * a(e, mm, j);
            for (std::size_t l = 0; l < p; ++l)
              lhs = lhs - a(l, i, j) * cert.eps[l][e][m];
            if (!lhs.is_zero()) {
              ok = false;
              break;
            }
          }
    for (std::size_t i = 0; i < r && ok; ++i)
      for (std::size_t j = 0; j < r && ok; ++j)
        for (std::size_t k = j + 1; k < r && ok; ++k)
          for (std::size_t l = k + 1; l < r; ++l) {
            RatFn lhs = RatFn::zero(base);
            for (std::size_t m = 0; m < r; ++m)
              lhs = lhs + c(i, m, j) * c(m, k, l) + c(i, m, k) * c(m, l, j) +
                    c(i, m, l) * c(m, j, k);
            lhs = lhs - d(j, c(i, k, l)) - d(k, c(i, l, j)) - d(l, c(i, j, k));
            for (std::size_t lam = 0; lam < p; ++lam)
              lhs = lhs - a(lam, i, l) * cert.nu[lam][j][k] -
                    a(lam, i, k) * cert.nu[lam][l][j] -
                    a(lam, i, j) * cert.nu[lam][k][l];
            if (!lhs.is_zero()) {
              ok = false;
              break;
            }
          }
    for (std::size_t i = 0; i < r && ok; ++i)
      for (std::size_t l = 0; l < p && ok; ++l)
        for (std::size_t j = 0; j < r && ok; ++j)
          for (std::size_t k = j + 1; k < r; ++k) {
            RatFn lhs = RatFn::zero(base);
            for (std::size_t m = 0; m < r; ++m)
              lhs = lhs + a(l, i, m) * c(m, j, k) - a(l, m, j) * c(i, m, k) +
                    a(l, m, k) * c(i, m, j);
            lhs = lhs + d(k, a(l, i, j)) - d(j, a(l, i, k));
            for (std::size_t mu = 0; mu < p; ++mu)
              lhs = lhs - a(mu, i, j) * cert.xi[l][mu][k] +
                    a(mu, i, k) * cert.xi[l][mu][j];
            if (!lhs.is_zero()) {
              ok = false;
              break;
            }
          }
    cert.back_substitution_ok = ok;
  }
  return cert;
}

bool cartan_data_solve_joint(const AlmostCartanAlgebroid& A) {
  // the three systems have disjoint unknowns; the joint system is SAT iff
  // each one is
  CartanDataCertificate c = cartan_data_solve(A);
  return c.sat();
}

AlmostCartanAlgebroid gauge_twist(const AlmostCartanAlgebroid& A, const MatRF& eta) {
  const std::size_t r = A.C.rank(), p = A.sigma.p();
  const ChartPtr& base = A.C.base();
  if (eta.size() != p) throw DimensionError("eta must have p rows");
  for (const auto& row : eta)
    if (row.size() != r) throw DimensionError("eta must have r columns");
  FramedAlgebroid C2(base, r, A.C.anchor());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j)
      for (std::size_t k = j + 1; k < r; ++k) {
        RatFn v = A.C.c(i, j, k);
        for (std::size_t l = 0; l < p; ++l)
          v = v + eta[l][j] * A.sigma.a(l, i, k) - eta[l][k] * A.sigma.a(l, i, j);
        C2.set_c(i, j, k, v);
      }
  return AlmostCartanAlgebroid(std::move(C2), A.sigma);
}

CartanPairReport cartan_pair_build(const AlmostCartanAlgebroid& A,
                                   const std::vector<MatRF>& nu,
                                   const std::vector<MatRF>& xi) {
  const std::size_t r = A.C.rank(), p = A.sigma.p();
  const ChartPtr& base = A.C.base();
  // anchor of the pair: rho on C, zero on sigma
  MatRF rho = mat_zero(base, base->dim(), r + p);
  for (std::size_t a = 0; a < base->dim(); ++a)
    for (std::size_t j = 0; j < r; ++j) rho[a][j] = A.C.anchor()[a][j];
  FramedAlgebroid P(base, r + p, std::move(rho));

  // [e^j, e^k] = (c_i^{jk} e^i, -nu_lambda^{jk} t^lambda)
  for (std::size_t j = 0; j < r; ++j)
    for (std::size_t k = j + 1; k < r; ++k) {
      for (std::size_t i = 0; i < r; ++i) P.set_c(i, j, k, A.C.c(i, j, k));
      for (std::size_t l = 0; l < p; ++l) P.set_c(r + l, j, k, -nu[l][j][k]);
    }
  // [e^j, t^mu] = (-t^mu(e^j), nabla_{e_j} t^mu)
  for (std::size_t j = 0; j < r; ++j)
    for (std::size_t m = 0; m < p; ++m) {
      for (std::size_t i = 0; i < r; ++i) P.set_c(i, j, r + m, -A.sigma.a(m, i, j));
      for (std::size_t l = 0; l < p; ++l) P.set_c(r + l, j, r + m, xi[m][l][j]);
    }
  // [t^eta, t^mu] = (0, commutator in sigma coordinates)
  CartanPairReport rep{std::move(P)};
  for (std::size_t e = 0; e < p; ++e)
    for (std::size_t m = e + 1; m < p; ++m) {
      MatRF comm = mat_mul(A.sigma.matrix(e), A.sigma.matrix(m));
      MatRF rev = mat_mul(A.sigma.matrix(m), A.sigma.matrix(e));
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) comm[i][j] = comm[i][j] - rev[i][j];
      // membership: comm = sum coef_l A^l
      MatRF Msys;
      VecRF rhs;
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) {
          VecRF row;
          for (std::size_t l = 0; l < p; ++l) row.push_back(A.sigma.a(l, i, j));
          Msys.push_back(std::move(row));
          rhs.push_back(comm[i][j]);
        }
      LinearSolution s = solve_linear(Msys, rhs, base, p);
      if (!s.sat) {
        rep.sigma_involutive = false;
        continue;
      }
      for (std::size_t l = 0; l < p; ++l)
        rep.pair.set_c(r + l, r + e, r + m, s.particular[l]);
    }

  // Jac mod sigma: C-components of the Jacobiator of the pair must vanish
  auto jac = jacobiator(rep.pair);
  for (const auto& [triple, v] : jac) {
    bool bad = false;
    for (std::size_t i = 0; i < r; ++i)
      if (!v[i].is_zero()) bad = true;
    if (bad) {
      rep.jacobiator_in_sigma = false;
      rep.bad_triple = triple;
      break;
    }
  }
  rep.standard = A.symbol_independent();
  rep.sigma_in_kernel = A.symbol_in_kernel();
  return rep;
}

FreedomDims freedom_dims(const AlmostCartanAlgebroid& A) {
  FreedomDims out;
  Tableau t = A.symbol_tableau();
  ProlongTower tower(t);
  out.dim_sigma1 = tower.level_dim(1);
  MatRF d02 = tower.spencer_delta(0, 2);
  std::size_t dom = increasing_tuples(t.dimE(), 2).size() * t.dim();
  Poly w(A.C.base());
  std::size_t rk = (d02.empty() || d02[0].empty()) ? 0 : rank(d02, w);
  out.dim_z02 = dom - rk;
  out.witness = w;
  return out;
}

// ---- systatic -------------------------------------------------------------

namespace {

// J_{u,v} as a Hom(C,C) matrix: alpha -> [[u,v],alpha] + [[v,alpha],u] + [[alpha,u],v]
MatRF systatic_J(const FramedAlgebroid& C, const VecRF& u, const VecRF& v) {
  const std::size_t r = C.rank();
  const ChartPtr& base = C.base();
  MatRF J = mat_zero(base, r, r);
  VecRF uv = C.bracket_sections(u, v);
  for (std::size_t j = 0; j < r; ++j) {
    VecRF ej(r, RatFn::zero(base));
    ej[j] = RatFn::one(base);
    VecRF t1 = C.bracket_sections(uv, ej);
    VecRF t2 = C.bracket_sections(C.bracket_sections(v, ej), u);
    VecRF t3 = C.bracket_sections(C.bracket_sections(ej, u), v);
    for (std::size_t i = 0; i < r; ++i) J[i][j] = t1[i] + t2[i] + t3[i];
  }
  return J;
}

// Ad_u(T) as a matrix, for T a Hom(C,C) matrix over the base:
// alpha -> [u, T(alpha)] - T([u, alpha])
MatRF systatic_Ad(const FramedAlgebroid& C, const VecRF& u, const MatRF& T) {
  const std::size_t r = C.rank();
  const ChartPtr& base = C.base();
  MatRF M = mat_zero(base, r, r);
  for (std::size_t j = 0; j < r; ++j) {
    VecRF ej(r, RatFn::zero(base));
    ej[j] = RatFn::one(base);
    VecRF Tj = mat_apply(T, ej);
    VecRF t1 = C.bracket_sections(u, Tj);
    VecRF t2 = mat_apply(T, C.bracket_sections(u, ej));
    for (std::size_t i = 0; i < r; ++i) M[i][j] = t1[i] - t2[i];
  }
  return M;
}

bool sigma_membership(const SymbolAction& sigma, const MatRF& M, VecRF& coeffs) {
  const std::size_t r = sigma.rank(), p = sigma.p();
  const ChartPtr& base = sigma.base();
  MatRF Msys;
  VecRF rhs;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) {
      VecRF row;
      for (std::size_t l = 0; l < p; ++l) row.push_back(sigma.a(l, i, j));
      Msys.push_back(std::move(row));
      rhs.push_back(M[i][j]);
    }
  LinearSolution s = solve_linear(Msys, rhs, base, p);
  if (!s.sat) return false;
  coeffs = s.particular;
  return true;
}

MatRF mat_sub(const MatRF& a, const MatRF& b) {
  MatRF r = a;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) r[i][j] = a[i][j] - b[i][j];
  return r;
}

bool mat_is_zero(const MatRF& a) {
  for (const auto& row : a)
    for (const auto& e : row)
      if (!e.is_zero()) return false;
  return true;
}

}  // namespace

SystaticBuild systatic_build(const AlmostCartanAlgebroid& A) {
  const std::size_t r = A.C.rank(), p = A.sigma.p();
  const ChartPtr& base = A.C.base();

  // S0 = kernel of u -> (t^lambda(u))_lambda
  MatRF K;
  for (std::size_t l = 0; l < p; ++l)
    for (std::size_t i = 0; i < r; ++i) {
      VecRF row;
      for (std::size_t j = 0; j < r; ++j) row.push_back(A.sigma.a(l, i, j));
      K.push_back(std::move(row));
    }
  Poly witness = Poly::constant(base, 1);
  std::vector<VecRF> s0;
  if (p == 0) {
    for (std::size_t j = 0; j < r; ++j) {
      VecRF v(r, RatFn::zero(base));
      v[j] = RatFn::one(base);
      s0.push_back(std::move(v));
    }
  } else {
    LinearSolution s = solve_linear(K, VecRF(K.size(), RatFn::zero(base)));
    s0 = s.nullspace;
    witness = s.witness;
  }
  const std::size_t s0n = s0.size();

  // structure of S on the frame (u_1..u_s0, t^1..t^p)
  MatRF rho = mat_zero(base, base->dim(), s0n + p);
  for (std::size_t a = 0; a < base->dim(); ++a)
    for (std::size_t b = 0; b < s0n; ++b) rho[a][b] = A.C.anchor_of(s0[b])[a];
  FramedAlgebroid S(base, s0n + p, std::move(rho));
  SystaticBuild out(std::move(S));
  out.s0_basis = s0;
  out.s0_witness = witness;

  // [u_a, u_b] = ([u,v] in S0 coords, J_{u,v} in sigma coords)
  for (std::size_t a = 0; a < s0n; ++a)
    for (std::size_t b = a + 1; b < s0n; ++b) {
      VecRF br = A.C.bracket_sections(s0[a], s0[b]);
      VecRF coef;
      if (!in_span(s0, br, &coef)) throw Error("S0 is not closed under the bracket");
      for (std::size_t q = 0; q < s0n; ++q) out.S.set_c(q, a, b, coef[q]);
      MatRF J = systatic_J(A.C, s0[a], s0[b]);
      VecRF jc;
      if (!sigma_membership(A.sigma, J, jc)) {
        out.j_in_sigma = false;
        continue;
      }
      for (std::size_t l = 0; l < p; ++l) out.S.set_c(s0n + l, a, b, jc[l]);
    }
  // [u_a, t^mu] = (0, Ad_{u_a}(t^mu))
  for (std::size_t a = 0; a < s0n; ++a)
    for (std::size_t m = 0; m < p; ++m) {
      MatRF Ad = systatic_Ad(A.C, s0[a], A.sigma.matrix(m));
      VecRF ac;
      if (!sigma_membership(A.sigma, Ad, ac)) {
        out.ad_in_sigma = false;
        continue;
      }
      for (std::size_t l = 0; l < p; ++l) out.S.set_c(s0n + l, a, s0n + m, ac[l]);
    }
  // [t^eta, t^mu] = (0, -[t^eta, t^mu])
  for (std::size_t e = 0; e < p; ++e)
    for (std::size_t m = e + 1; m < p; ++m) {
      MatRF comm = mat_sub(mat_mul(A.sigma.matrix(e), A.sigma.matrix(m)),
                           mat_mul(A.sigma.matrix(m), A.sigma.matrix(e)));
      VecRF cc;
      if (!sigma_membership(A.sigma, comm, cc)) {
        out.j_in_sigma = false;
        continue;
      }
      for (std::size_t l = 0; l < p; ++l) out.S.set_c(s0n + l, e + s0n, m + s0n, -cc[l]);
    }

  // Lemma identities
  auto Jm = [&](const VecRF& u, const VecRF& v) { return systatic_J(A.C, u, v); };
  auto Adm = [&](const VecRF& u, const MatRF& T) { return systatic_Ad(A.C, u, T); };
  auto comm = [&](const MatRF& X, const MatRF& Y) {
    return mat_sub(mat_mul(X, Y), mat_mul(Y, X));
  };
  for (std::size_t a = 0; a < s0n && out.lemma_identities_ok; ++a)
    for (std::size_t b = a + 1; b < s0n && out.lemma_identities_ok; ++b) {
      // identity 2 with each sigma frame element
      for (std::size_t m = 0; m < p; ++m) {
        MatRF lhs = mat_sub(mat_sub(Adm(s0[a], Adm(s0[b], A.sigma.matrix(m))),
                                    Adm(s0[b], Adm(s0[a], A.sigma.matrix(m)))),
                            systatic_Ad(A.C, A.C.bracket_sections(s0[a], s0[b]),
                                        A.sigma.matrix(m)));
        MatRF rhs = comm(A.sigma.matrix(m), Jm(s0[a], s0[b]));
        if (!mat_is_zero(mat_sub(lhs, rhs))) out.lemma_identities_ok = false;
      }
      // identity 1 on triples
      for (std::size_t cix = b + 1; cix < s0n; ++cix) {
        const VecRF &u = s0[a], &v = s0[b], &w = s0[cix];
        MatRF lhs = Adm(u, Jm(v, w));
        lhs = mat_sub(lhs, Adm(v, Jm(u, w)));
        MatRF t = Adm(w, Jm(u, v));
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < r; ++j) lhs[i][j] = lhs[i][j] + t[i][j];
        lhs = mat_sub(lhs, Jm(A.C.bracket_sections(u, v), w));
        t = Jm(A.C.bracket_sections(u, w), v);
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < r; ++j) lhs[i][j] = lhs[i][j] + t[i][j];
        lhs = mat_sub(lhs, Jm(A.C.bracket_sections(v, w), u));
        if (!mat_is_zero(lhs)) out.lemma_identities_ok = false;
      }
    }
  // identity 3
  for (std::size_t a = 0; a < s0n && out.lemma_identities_ok; ++a)
    for (std::size_t e = 0; e < p && out.lemma_identities_ok; ++e)
      for (std::size_t m = 0; m < p; ++m) {
        MatRF lhs = Adm(s0[a], comm(A.sigma.matrix(e), A.sigma.matrix(m)));
        MatRF rhs1 = comm(Adm(s0[a], A.sigma.matrix(e)), A.sigma.matrix(m));
        MatRF rhs2 = comm(A.sigma.matrix(e), Adm(s0[a], A.sigma.matrix(m)));
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < r; ++j)
            rhs1[i][j] = rhs1[i][j] + rhs2[i][j];
        if (!mat_is_zero(mat_sub(lhs, rhs1))) out.lemma_identities_ok = false;
      }

  // Lie algebroid verdict for S
  bool jac_zero = true;
  for (const auto& [t3, v] : jacobiator(out.S))
    for (const auto& e : v)
      if (!e.is_zero()) jac_zero = false;
  out.lie_algebroid_ok = jac_zero && check_almost_lie(out.S).ok() &&
                         out.j_in_sigma && out.ad_in_sigma;
  return out;
}

AlgebroidRestriction restrict_algebroid(
    const AlmostCartanAlgebroid& A,
    const std::vector<std::pair<std::size_t, Rat>>& assignments) {
  const ChartPtr& base = A.C.base();
  const std::size_t r = A.C.rank(), p = A.sigma.p();
  std::vector<bool> assigned(base->dim(), false);
  for (const auto& [v, val] : assignments) {
    if (v >= base->dim()) throw DimensionError("assigned variable out of range");
    assigned[v] = true;
  }
  // slice chart and the substitution map base -> slice values
  std::vector<std::string> keep_names;
  std::vector<std::size_t> keep_vars;
  for (std::size_t v = 0; v < base->dim(); ++v)
    if (!assigned[v]) {
      keep_names.push_back(base->var(v));
      keep_vars.push_back(v);
    }
  ChartPtr slice = Chart::make(keep_names);
  VecRF sub(base->dim(), RatFn::zero(slice));
  for (const auto& [v, val] : assignments) sub[v] = RatFn::constant(slice, val);
  for (std::size_t q = 0; q < keep_vars.size(); ++q)
    sub[keep_vars[q]] = RatFn::variable(slice, q);
  // nonvanishing constraints must survive the substitution
  for (const auto& nv : base->nonvanishing()) {
    RatFn restricted = RatFn(nv).subst(sub);
    if (restricted.is_zero())
      throw EvalError("restriction hits a nonvanishing constraint: " + nv.str());
  }

  // kept frame: unanchored elements, plus anchored ones along kept directions
  auto anchored = A.C.anchored_indices();
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < r; ++j)
    if (!anchored[j] || !assigned[*anchored[j]]) kept.push_back(j);

  MatRF rho = mat_zero(slice, slice->dim(), kept.size());
  for (std::size_t jj = 0; jj < kept.size(); ++jj)
    if (anchored[kept[jj]]) {
      std::size_t a = *anchored[kept[jj]];
      std::size_t q = 0;
      while (keep_vars[q] != a) ++q;
      rho[q][jj] = RatFn::one(slice);
    }
  FramedAlgebroid C2(slice, kept.size(), std::move(rho));
  for (std::size_t ii = 0; ii < kept.size(); ++ii)
    for (std::size_t jj = 0; jj < kept.size(); ++jj)
      for (std::size_t kk = jj + 1; kk < kept.size(); ++kk)
        C2.set_c(ii, jj, kk, A.C.c(kept[ii], kept[jj], kept[kk]).subst(sub));
  // dropped-direction components of kept brackets must vanish on the slice
  for (std::size_t jj = 0; jj < kept.size(); ++jj)
    for (std::size_t kk = jj + 1; kk < kept.size(); ++kk)
      for (std::size_t i = 0; i < r; ++i) {
        if (std::find(kept.begin(), kept.end(), i) != kept.end()) continue;
        if (!A.C.c(i, kept[jj], kept[kk]).subst(sub).is_zero())
          throw Error("bracket leaves the restricted frame on the slice");
      }
  SymbolAction sig2(slice, kept.size(), p);
  for (std::size_t l = 0; l < p; ++l)
    for (std::size_t ii = 0; ii < kept.size(); ++ii)
      for (std::size_t jj = 0; jj < kept.size(); ++jj)
        sig2.set_a(l, ii, jj, A.sigma.a(l, kept[ii], kept[jj]).subst(sub));

  AlgebroidRestriction out{AlmostCartanAlgebroid(std::move(C2), std::move(sig2)),
                           kept, slice};
  return out;
}

}  // namespace cartan
