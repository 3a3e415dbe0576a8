#include "cartan/chartcalc.hpp"

#include <algorithm>

#include "cartan/errors.hpp"

namespace cartan {

namespace {
// sorts idx in place; returns 0 if a repeat occurs, else the permutation sign
int sort_sign(IdxTuple& idx) {
  int sign = 1;
  for (std::size_t i = 1; i < idx.size(); ++i)
    for (std::size_t j = i; j > 0 && idx[j - 1] >= idx[j]; --j) {
      if (idx[j - 1] == idx[j]) return 0;
      std::swap(idx[j - 1], idx[j]);
      sign = -sign;
    }
  return sign;
}
}  // namespace

DForm::DForm(ChartPtr chart, unsigned degree)
    : chart_(std::move(chart)), degree_(degree) {}

DForm DForm::function(const RatFn& f) {
  DForm a(f.chart(), 0);
  if (!f.is_zero()) a.t_.emplace(IdxTuple{}, f);
  return a;
}

DForm DForm::d_var(const ChartPtr& chart, std::size_t index) {
  DForm a(chart, 1);
  a.add_term({static_cast<std::uint32_t>(index)}, RatFn::one(chart));
  return a;
}

void DForm::add_term(IdxTuple idx, const RatFn& c) {
  if (idx.size() != degree_) throw DimensionError("DForm::add_term: wrong tuple length");
  if (c.is_zero()) return;
  for (auto i : idx)
    if (i >= chart_->dim()) throw DimensionError("DForm::add_term: index out of range");
  int sign = sort_sign(idx);
  if (sign == 0) return;
  RatFn v = sign < 0 ? -c : c;
  auto [it, inserted] = t_.emplace(std::move(idx), v);
  if (!inserted) {
    it->second = it->second + v;
    if (it->second.is_zero()) t_.erase(it);
  }
}

RatFn DForm::coeff(const IdxTuple& idx) const {
  auto it = t_.find(idx);
  return it == t_.end() ? RatFn::zero(chart_) : it->second;
}

DForm DForm::operator+(const DForm& o) const {
  require_compatible(chart_, o.chart_, "DForm::operator+");
  if (degree_ != o.degree_) throw DimensionError("adding forms of different degree");
  DForm r = *this;
  for (const auto& [m, c] : o.t_) r.add_term(m, c);
  return r;
}

DForm DForm::operator-(const DForm& o) const { return *this + (-o); }

DForm DForm::operator-() const {
  DForm r(chart_, degree_);
  for (const auto& [m, c] : t_) r.t_.emplace(m, -c);
  return r;
}

DForm DForm::operator*(const RatFn& f) const {
  DForm r(chart_, degree_);
  if (f.is_zero()) return r;
  for (const auto& [m, c] : t_) {
    RatFn v = c * f;
    if (!v.is_zero()) r.t_.emplace(m, v);
  }
  return r;
}

bool DForm::eq(const DForm& o) const { return (*this - o).is_zero(); }

std::string DForm::str() const {
  if (t_.empty()) return "0";
  std::string out;
  for (const auto& [m, c] : t_) {
    if (!out.empty()) out += " + ";
    out += "(" + c.str() + ")";
    for (auto i : m) out += "*d" + chart_->var(i);
  }
  return out;
}

DForm wedge(const DForm& a, const DForm& b) {
  require_compatible(a.chart(), b.chart(), "wedge");
  DForm r(a.chart(), a.degree() + b.degree());
  IdxTuple merged;
  for (const auto& [ma, ca] : a.terms())
    for (const auto& [mb, cb] : b.terms()) {
      merged = ma;
      merged.insert(merged.end(), mb.begin(), mb.end());
      r.add_term(merged, ca * cb);
    }
  return r;
}

DForm dext(const DForm& a) {
  DForm r(a.chart(), a.degree() + 1);
  const std::size_t n = a.chart()->dim();
  IdxTuple idx;
  for (const auto& [m, c] : a.terms())
    for (std::size_t v = 0; v < n; ++v) {
      RatFn dc = c.deriv(v);
      if (dc.is_zero()) continue;
      idx.clear();
      idx.push_back(static_cast<std::uint32_t>(v));
      idx.insert(idx.end(), m.begin(), m.end());
      r.add_term(idx, dc);
    }
  return r;
}

VField::VField(ChartPtr chart)
    : chart_(chart), c_(chart->dim(), RatFn::zero(chart)) {}

VField::VField(ChartPtr chart, VecRF coeffs) : chart_(std::move(chart)), c_(std::move(coeffs)) {
  if (c_.size() != chart_->dim())
    throw DimensionError("VField: coefficient count != chart dimension");
}

VField VField::coordinate(const ChartPtr& chart, std::size_t index) {
  VField X(chart);
  X.c_[index] = RatFn::one(chart);
  return X;
}

VField VField::operator+(const VField& o) const {
  require_compatible(chart_, o.chart_, "VField::operator+");
  VField r(chart_);
  for (std::size_t i = 0; i < c_.size(); ++i) r.c_[i] = c_[i] + o.c_[i];
  return r;
}

VField VField::operator-(const VField& o) const {
  require_compatible(chart_, o.chart_, "VField::operator-");
  VField r(chart_);
  for (std::size_t i = 0; i < c_.size(); ++i) r.c_[i] = c_[i] - o.c_[i];
  return r;
}

VField VField::operator*(const RatFn& f) const {
  VField r(chart_);
  for (std::size_t i = 0; i < c_.size(); ++i) r.c_[i] = c_[i] * f;
  return r;
}

bool VField::eq(const VField& o) const {
  for (std::size_t i = 0; i < c_.size(); ++i)
    if (!c_[i].eq(o.c_[i])) return false;
  return true;
}

bool VField::is_zero() const {
  for (const auto& c : c_)
    if (!c.is_zero()) return false;
  return true;
}

RatFn VField::apply(const RatFn& f) const {
  require_compatible(chart_, f.chart(), "VField::apply");
  RatFn acc = RatFn::zero(chart_);
  for (std::size_t i = 0; i < c_.size(); ++i) {
    if (c_[i].is_zero()) continue;
    acc = acc + c_[i] * f.deriv(i);
  }
  return acc;
}

std::string VField::str() const {
  std::string out;
  for (std::size_t i = 0; i < c_.size(); ++i) {
    if (c_[i].is_zero()) continue;
    if (!out.empty()) out += " + ";
    out += "(" + c_[i].str() + ")*@" + chart_->var(i);
  }
  return out.empty() ? "0" : out;
}

VField lie_bracket(const VField& X, const VField& Y) {
  require_compatible(X.chart(), Y.chart(), "lie_bracket");
  VField r(X.chart());
  for (std::size_t i = 0; i < X.chart()->dim(); ++i)
    r[i] = X.apply(Y[i]) - Y.apply(X[i]);
  return r;
}

RatFn pair(const DForm& a, const VField& X) {
  if (a.degree() != 1) throw DimensionError("pair: form degree must be 1");
  require_compatible(a.chart(), X.chart(), "pair");
  RatFn acc = RatFn::zero(a.chart());
  for (const auto& [m, c] : a.terms()) acc = acc + c * X[m[0]];
  return acc;
}

DForm interior(const VField& X, const DForm& a) {
  require_compatible(a.chart(), X.chart(), "interior");
  if (a.degree() == 0) return DForm(a.chart(), 0);
  DForm r(a.chart(), a.degree() - 1);
  for (const auto& [m, c] : a.terms())
    for (std::size_t k = 0; k < m.size(); ++k) {
      if (X[m[k]].is_zero()) continue;
      IdxTuple rest;
      for (std::size_t j = 0; j < m.size(); ++j)
        if (j != k) rest.push_back(m[j]);
      RatFn v = c * X[m[k]];
      r.add_term(rest, (k % 2) ? -v : v);
    }
  return r;
}

RatMap::RatMap(ChartPtr source, ChartPtr target, VecRF components)
    : source_(std::move(source)), target_(std::move(target)), comp_(std::move(components)) {
  if (comp_.size() != target_->dim())
    throw DimensionError("RatMap: component count != target dimension");
  for (const auto& c : comp_)
    require_compatible(c.chart(), source_, "RatMap components");
}

RatMap RatMap::identity(const ChartPtr& chart) {
  VecRF comp;
  for (std::size_t i = 0; i < chart->dim(); ++i)
    comp.push_back(RatFn::variable(chart, i));
  return RatMap(chart, chart, std::move(comp));
}

RatMap RatMap::after(const RatMap& first) const {
  require_compatible(source_, first.target_, "RatMap::after");
  VecRF comp;
  comp.reserve(comp_.size());
  for (const auto& c : comp_) comp.push_back(c.subst(first.comp_));
  return RatMap(first.source_, target_, std::move(comp));
}

RatFn RatMap::pull(const RatFn& f) const {
  require_compatible(f.chart(), target_, "RatMap::pull");
  return f.subst(comp_);
}

bool RatMap::is_inverse(const RatMap& inv) const {
  if (!compatible(inv.source_, target_) || !compatible(inv.target_, source_))
    return false;
  RatMap a = inv.after(*this);   // source -> source
  RatMap b = this->after(inv);   // target -> target
  for (std::size_t i = 0; i < source_->dim(); ++i)
    if (!a.comp_[i].eq(RatFn::variable(source_, i))) return false;
  for (std::size_t i = 0; i < target_->dim(); ++i)
    if (!b.comp_[i].eq(RatFn::variable(target_, i))) return false;
  return true;
}

MatRF RatMap::jacobian() const {
  MatRF J = mat_zero(source_, comp_.size(), source_->dim());
  for (std::size_t i = 0; i < comp_.size(); ++i)
    for (std::size_t j = 0; j < source_->dim(); ++j) J[i][j] = comp_[i].deriv(j);
  return J;
}

std::string RatMap::str() const {
  std::string out;
  for (std::size_t i = 0; i < comp_.size(); ++i) {
    if (!out.empty()) out += ", ";
    out += target_->var(i) + " = " + comp_[i].str();
  }
  return out;
}

DForm pullback(const RatMap& F, const DForm& a) {
  require_compatible(a.chart(), F.target(), "pullback");
  const ChartPtr& src = F.source();
  if (a.degree() == 0) {
    RatFn c = a.is_zero() ? RatFn::zero(src) : F.pull(a.terms().begin()->second);
    return DForm::function(c);
  }
  // d(F^i) as degree-1 forms on the source
  std::vector<DForm> dF;
  dF.reserve(F.components().size());
  for (const auto& c : F.components()) {
    DForm d(src, 1);
    for (std::size_t j = 0; j < src->dim(); ++j)
      d.add_term({static_cast<std::uint32_t>(j)}, c.deriv(j));
    dF.push_back(std::move(d));
  }
  DForm r(src, a.degree());
  for (const auto& [m, c] : a.terms()) {
    DForm term = DForm::function(F.pull(c));
    for (auto i : m) term = wedge(term, dF[i]);
    r = r + term;
  }
  return r;
}

VField pushforward(const RatMap& F, const RatMap& Finv, const VField& X) {
  require_compatible(X.chart(), F.source(), "pushforward");
  if (!F.is_inverse(Finv)) throw Error("pushforward: supplied map is not an inverse");
  const ChartPtr& tgt = F.target();
  VField Y(tgt);
  for (std::size_t i = 0; i < tgt->dim(); ++i) {
    // (dF^i applied to X), then expressed in target coordinates
    RatFn w = RatFn::zero(F.source());
    for (std::size_t j = 0; j < F.source()->dim(); ++j) {
      if (X[j].is_zero()) continue;
      w = w + F.components()[i].deriv(j) * X[j];
    }
    Y[i] = Finv.pull(w);
  }
  return Y;
}

bool is_related(const RatMap& F, const VField& X, const VField& Y) {
  require_compatible(X.chart(), F.source(), "is_related");
  require_compatible(Y.chart(), F.target(), "is_related");
  for (std::size_t i = 0; i < F.target()->dim(); ++i) {
    RatFn lhs = RatFn::zero(F.source());
    for (std::size_t j = 0; j < F.source()->dim(); ++j) {
      if (X[j].is_zero()) continue;
      lhs = lhs + F.components()[i].deriv(j) * X[j];
    }
    if (!lhs.eq(F.pull(Y[i]))) return false;
  }
  return true;
}

CoframeReport coframe_check(const std::vector<DForm>& forms) {
  CoframeReport rep;
  if (forms.empty()) throw DimensionError("coframe_check: empty list");
  const ChartPtr& chart = forms[0].chart();
  if (forms.size() != chart->dim())
    throw DimensionError("coframe_check: count != chart dimension");
  MatRF M = mat_zero(chart, forms.size(), chart->dim());
  for (std::size_t i = 0; i < forms.size(); ++i) {
    if (forms[i].degree() != 1)
      throw DimensionError("coframe_check: all forms must have degree 1");
    require_compatible(forms[i].chart(), chart, "coframe_check");
    for (const auto& [m, c] : forms[i].terms()) M[i][m[0]] = c;
  }
  rep.witness = det(M);
  rep.ok = !rep.witness.is_zero();
  return rep;
}

FrobeniusReport frobenius_involutive(const std::vector<VField>& span) {
  if (span.empty()) throw DimensionError("frobenius_involutive: empty span");
  const ChartPtr& chart = span[0].chart();
  FrobeniusReport rep;
  MatRF base;
  for (const auto& X : span) {
    require_compatible(X.chart(), chart, "frobenius_involutive");
    base.push_back(X.coeffs());
  }
  Poly w = Poly::constant(chart, 1);
  std::size_t r0 = rank(base, w);
  rep.generic_rank = r0;
  rep.witness = w;
  rep.involutive = true;
  for (std::size_t i = 0; i < span.size() && rep.involutive; ++i)
    for (std::size_t j = i + 1; j < span.size(); ++j) {
      VField br = lie_bracket(span[i], span[j]);
      MatRF ext = base;
      ext.push_back(br.coeffs());
      if (rank(ext) != r0) {
        rep.involutive = false;
        rep.counterexample = {i, j};
        break;
      }
    }
  return rep;
}

}  // namespace cartan
