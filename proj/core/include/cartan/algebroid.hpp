#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cartan/chartcalc.hpp"
#include "cartan/tableau.hpp"

namespace cartan {

/// Anchored bracket data over a base chart in a fixed frame e^1..e^r:
/// anchor matrix rho (n x r) and structure functions c_i^{jk}
/// (antisymmetric in j,k) with [e^j,e^k] = c_i^{jk} e^i.
class FramedAlgebroid {
 public:
  FramedAlgebroid(ChartPtr base, std::size_t rank, MatRF anchor);

  const ChartPtr& base() const { return base_; }
  std::size_t rank() const { return r_; }
  const MatRF& anchor() const { return rho_; }

  void set_c(std::size_t i, std::size_t j, std::size_t k, const RatFn& v);
  const RatFn& c(std::size_t i, std::size_t j, std::size_t k) const;

  /// Anchor image of the frame element e^j as a vector field on the base.
  VField anchor_field(std::size_t j) const;
  VField anchor_of(const VecRF& section) const;

  /// Frame bracket [e^j, e^k] as frame coefficients.
  VecRF bracket_frame(std::size_t j, std::size_t k) const;
  /// Bracket of sections with function coefficients (includes the Leibniz
  /// derivative terms).
  VecRF bracket_sections(const VecRF& a, const VecRF& b) const;

  /// Indices a such that rho(e^j) = d/dx_a exactly; nullopt when rho(e^j)=0;
  /// throws when some column is neither (the (C0)-(C3) machinery requires
  /// the paper's normalized local model).
  std::vector<std::optional<std::size_t>> anchored_indices() const;
  bool is_normalized_model() const;

  /// Derivative of f along rho(e^j) (zero when rho(e^j) = 0); only valid in
  /// the normalized model.
  RatFn dframe(std::size_t j, const RatFn& f) const;

 private:
  ChartPtr base_;
  std::size_t r_;
  MatRF rho_;                      // n x r
  std::vector<MatRF> c_;           // c_[i][j][k]
};

struct AlmostLieReport {
  bool antisymmetry_ok = true;
  bool anchor_ok = true;
  /// Failing pairs (j,k) with the residual vector field.
  std::vector<std::tuple<std::size_t, std::size_t, VField>> anchor_residuals;
  bool ok() const { return antisymmetry_ok && anchor_ok; }
};

/// Verifies the anchor identity rho([e^j,e^k]) = [rho e^j, rho e^k] on all
/// frame pairs.
AlmostLieReport check_almost_lie(const FramedAlgebroid& F);

/// Jacobiator values Jac(e^i,e^j,e^k) for i<j<k, as frame coefficients.
std::map<std::tuple<std::size_t, std::size_t, std::size_t>, VecRF>
jacobiator(const FramedAlgebroid& F);

/// The tableau action of the symbol frame t^1..t^p on the algebroid frame:
/// t^lambda(e^j) = a_i^{lambda j} e^i, with A^lambda = (a_i^{lambda j})
/// linearly independent and image inside ker rho.
class SymbolAction {
 public:
  SymbolAction(ChartPtr base, std::size_t rank, std::size_t p);
  std::size_t p() const { return p_; }
  std::size_t rank() const { return r_; }
  const ChartPtr& base() const { return base_; }

  void set_a(std::size_t lambda, std::size_t i, std::size_t j, const RatFn& v);
  const RatFn& a(std::size_t lambda, std::size_t i, std::size_t j) const;
  const MatRF& matrix(std::size_t lambda) const { return A_[lambda]; }

  /// Apply t^lambda to a section (frame coefficients).
  VecRF apply(std::size_t lambda, const VecRF& section) const;

 private:
  ChartPtr base_;
  std::size_t r_, p_;
  std::vector<MatRF> A_;
};

struct AlmostCartanAlgebroid {
  FramedAlgebroid C;
  SymbolAction sigma;

  AlmostCartanAlgebroid(FramedAlgebroid c, SymbolAction s);

  /// (C0) in the normalized model: c_i^{jk} = 0 and a_i^{lambda j} = 0 for
  /// every anchored frame index i.
  bool check_c0() const;
  /// Independence of the matrices A^lambda over the function field.
  bool symbol_independent() const;
  /// Image of every A^lambda inside ker rho.
  bool symbol_in_kernel() const;

  /// The symbol viewed as a tableau with E = F = the frame fiber.
  Tableau symbol_tableau() const;
};

/// Certificate for Cartan's conditions (C1)-(C3). Each condition is a
/// linear system over the base function field; SAT solutions are verified
/// by exact back-substitution.
struct CartanDataCertificate {
  bool c1_sat = false, c2_sat = false, c3_sat = false;
  // eps[lambda][eta][mu], antisymmetric in (eta,mu)
  std::vector<MatRF> eps;
  // nu[lambda][j][k], antisymmetric in (j,k)
  std::vector<MatRF> nu;
  // xi[mu][lambda][j]:  nabla_{e_j}(t^mu) = xi[mu][lambda][j] t^lambda
  std::vector<MatRF> xi;
  std::optional<VecRF> c1_unsat_row, c2_unsat_row, c3_unsat_row;
  bool sat() const { return c1_sat && c2_sat && c3_sat; }
  bool back_substitution_ok = false;
};

CartanDataCertificate cartan_data_solve(const AlmostCartanAlgebroid& A);

/// Joint solve of (C1)-(C3) as a single stacked system; must agree with the
/// independent solves on SAT/UNSAT.
bool cartan_data_solve_joint(const AlmostCartanAlgebroid& A);

/// Gauge twist by eta: C -> sigma, eta(e^j) = eta[lambda][j] t^lambda:
/// [a,b]^eta = [a,b] + eta(a)(b) - eta(b)(a). The anchor and symbol action
/// are unchanged.
AlmostCartanAlgebroid gauge_twist(const AlmostCartanAlgebroid& A, const MatRF& eta);

struct CartanPairReport {
  FramedAlgebroid pair;  // on C + sigma, rank r + p
  bool sigma_in_kernel = true;
  bool sigma_involutive = true;
  bool jacobiator_in_sigma = true;
  bool standard = true;
  std::optional<std::tuple<std::size_t, std::size_t, std::size_t>> bad_triple;
};

/// Builds the standard Cartan pair on C + sigma from a choice of
/// t (nu-table) and nabla (xi-table), and verifies the Cartan-pair axioms.
CartanPairReport cartan_pair_build(const AlmostCartanAlgebroid& A,
                                   const std::vector<MatRF>& nu,
                                   const std::vector<MatRF>& xi);

struct FreedomDims {
  std::size_t dim_z02 = 0;        // freedom in t
  std::size_t dim_sigma1 = 0;     // freedom in nabla (per sigma-section)
  Poly witness;
  FreedomDims() : witness(ChartPtr{}) {}
};

FreedomDims freedom_dims(const AlmostCartanAlgebroid& A);

/// The systatic algebra: S0 = joint kernel of the symbol action inside C,
/// S = S0 + sigma with bracket
///   [(u,S),(v,T)] = ([u,v], J_{u,v} + Ad_u(T) - Ad_v(S) - [S,T]).
struct SystaticBuild {
  std::vector<VecRF> s0_basis;      // sections of C
  Poly s0_witness;                  // rank locus witness for S0
  FramedAlgebroid S;                // frame: S0 basis then sigma frame
  bool j_in_sigma = true;           // J_{u,v} lands in sigma
  bool ad_in_sigma = true;          // Ad_u(T) lands in sigma
  bool lemma_identities_ok = true;  // d_Ad J = 0 and the two Ad identities
  bool lie_algebroid_ok = false;    // Jacobi + anchor identity for S
  SystaticBuild(FramedAlgebroid s) : s0_witness(ChartPtr{}), S(std::move(s)) {}
};

SystaticBuild systatic_build(const AlmostCartanAlgebroid& A);

/// Restriction of the algebroid data to a slice of the base: assigned base
/// coordinates are substituted and dropped; the frame restricts to
/// C_S = { alpha : rho(alpha) tangent to the slice }.
struct AlgebroidRestriction {
  AlmostCartanAlgebroid data;
  std::vector<std::size_t> kept_frame;  // indices into the original frame
  ChartPtr slice_base;
};

AlgebroidRestriction restrict_algebroid(
    const AlmostCartanAlgebroid& A,
    const std::vector<std::pair<std::size_t, Rat>>& assignments);

}  // namespace cartan
