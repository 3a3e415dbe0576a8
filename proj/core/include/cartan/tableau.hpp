#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cartan/linalg.hpp"

namespace cartan {

/// Enumerates strictly increasing m-tuples in {0..n-1}, lexicographically.
std::vector<std::vector<std::uint32_t>> increasing_tuples(std::size_t n, std::size_t m);

/// A tableau: a subspace of Hom(E,F) given by a basis of F x E matrices,
/// over exact rationals (0-variable chart) or generically over the function
/// field of a chart. Basis matrices must be linearly independent.
class Tableau {
 public:
  Tableau(ChartPtr chart, std::size_t dimE, std::size_t dimF,
          std::vector<MatRF> basis);

  /// The full tableau Hom(R^n, R^n) over the rationals.
  static Tableau full(std::size_t n);
  /// so(2) inside Hom(R^2,R^2): span of the rotation generator.
  static Tableau so2();
  static Tableau zero(ChartPtr chart, std::size_t dimE, std::size_t dimF);

  const ChartPtr& chart() const { return chart_; }
  std::size_t dimE() const { return dimE_; }
  std::size_t dimF() const { return dimF_; }
  std::size_t dim() const { return basis_.size(); }
  const std::vector<MatRF>& basis() const { return basis_; }

 private:
  ChartPtr chart_;
  std::size_t dimE_, dimF_;
  std::vector<MatRF> basis_;
};

/// Chain of prolongations sigma^(0), sigma^(1), ... Level l >= 1 stores the
/// inclusion map into Hom(E, sigma^(l-1)): basis vector mu of sigma^(l) maps
/// e_a to the sigma^(l-1) coordinate column B[mu][.][a].
class ProlongTower {
 public:
  explicit ProlongTower(Tableau base);

  const Tableau& base() const { return base_; }
  /// dim sigma^(l); computes levels on demand.
  std::size_t level_dim(std::size_t l);
  /// Basis of sigma^(l) as matrices (dim sigma^(l-1)) x dimE.
  const std::vector<MatRF>& level_basis(std::size_t l);
  std::size_t levels_computed() const { return levels_.size(); }

  /// The matrix of the Spencer coboundary
  ///   delta : Hom(Lambda^m E, sigma^(l)) -> Hom(Lambda^{m+1} E, sigma^(l-1))
  /// in the increasing-tuple / basis-index bases (row-major: tuple outer,
  /// basis index inner).
  MatRF spencer_delta(std::size_t l, std::size_t m);

 private:
  Tableau base_;
  // levels_[l] for l >= 1; level 0 is the base basis itself
  std::vector<std::vector<MatRF>> levels_;
  void ensure_level(std::size_t l);
};

struct SpencerReport {
  std::vector<std::size_t> prolong_dims;               // dim sigma^(l), l = 0..
  std::map<std::pair<int, int>, std::size_t> h_dims;   // (l,m) -> dim H^{l,m}
  std::optional<unsigned> finite_type_order;           // first l with sigma^(l) = 0
  bool h_l1_all_zero = true;
  Poly witness;
  SpencerReport() : witness(ChartPtr{}) {}
};

/// First prolongation as a standalone tableau (E unchanged, F := sigma).
Tableau prolong(const Tableau& t);

/// Spencer coboundary matrix for a plain tableau (convenience wrapper).
MatRF spencer_delta(const Tableau& t, std::size_t l, std::size_t m);

/// Dimensions dim sigma^(l) and dim H^{l,m} for l <= l_max, m <= m_max.
SpencerReport cohomology_dims(const Tableau& t, std::size_t l_max, std::size_t m_max);

enum class InvolutivityVerdict { PassWithinBounds, FailWithinBounds, FiniteType };

struct InvolutivityReport {
  InvolutivityVerdict verdict = InvolutivityVerdict::FailWithinBounds;
  std::optional<unsigned> finite_type_order;
  bool acyclic_within_bounds = false;
  SpencerReport spencer;
  std::string describe() const;
};

/// Bounded involutivity check: H^{l,m} = 0 for 1 <= m <= r, 0 <= l <= l_max.
/// Reports FINITE-TYPE(l) when some prolongation vanishes. The check is
/// only within the supplied bounds, never an unbounded claim.
InvolutivityReport involutivity_verdict(const Tableau& t, std::size_t r,
                                        std::size_t l_max);

}  // namespace cartan
