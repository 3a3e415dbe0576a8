#include "cartan/poly.hpp"

#include <algorithm>

#include "cartan/errors.hpp"

namespace cartan {

namespace {
Mono zero_mono(const ChartPtr& c) { return Mono(c ? c->dim() : 0, 0); }
}  // namespace

Poly Poly::constant(ChartPtr chart, const Rat& c) {
  Poly p(chart);
  if (c != 0 && p.chart()) p.t_.emplace(zero_mono(p.chart()), c);
  return p;
}

Poly Poly::variable(ChartPtr chart, std::size_t index) {
  if (index >= chart->dim()) throw DimensionError("variable index out of range");
  Mono m = zero_mono(chart);
  m[index] = 1;
  return monomial(std::move(chart), m, 1);
}

Poly Poly::monomial(ChartPtr chart, const Mono& m, const Rat& c) {
  if (m.size() != chart->dim())
    throw DimensionError("monomial length != chart dimension");
  Poly p(std::move(chart));
  if (c != 0) p.t_.emplace(m, c);
  return p;
}

bool Poly::is_constant() const {
  return t_.empty() || (t_.size() == 1 && mono_degree(t_.begin()->first) == 0);
}

Rat Poly::constant_value() const {
  if (t_.empty()) return 0;
  auto it = t_.find(zero_mono(chart_));
  return it == t_.end() ? Rat(0) : it->second;
}

void Poly::add_term(const Mono& m, const Rat& c) {
  if (c == 0) return;
  auto [it, inserted] = t_.emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) t_.erase(it);
  }
}

Poly Poly::operator-() const {
  Poly r(chart_);
  for (const auto& [m, c] : t_) r.t_.emplace(m, -c);
  return r;
}

Poly Poly::operator+(const Poly& o) const {
  require_compatible(chart_, o.chart_, "Poly::operator+");
  Poly r = *this;
  for (const auto& [m, c] : o.t_) r.add_term(m, c);
  return r;
}

Poly Poly::operator-(const Poly& o) const {
  require_compatible(chart_, o.chart_, "Poly::operator-");
  Poly r = *this;
  for (const auto& [m, c] : o.t_) r.add_term(m, -c);
  return r;
}

Poly Poly::operator*(const Poly& o) const {
  require_compatible(chart_, o.chart_, "Poly::operator*");
  Poly r(chart_);
  Mono m(chart_->dim());
  for (const auto& [ma, ca] : t_)
    for (const auto& [mb, cb] : o.t_) {
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = ma[i] + mb[i];
      r.add_term(m, ca * cb);
    }
  return r;
}

Poly Poly::operator*(const Rat& c) const {
  Poly r(chart_);
  if (c == 0) return r;
  for (const auto& [m, cc] : t_) r.t_.emplace(m, cc * c);
  return r;
}

Poly Poly::pow(unsigned e) const {
  Poly r = Poly::constant(chart_, 1);
  Poly base = *this;
  while (e) {
    if (e & 1u) r = r * base;
    base = base * base;
    e >>= 1u;
  }
  return r;
}

Poly Poly::deriv(std::size_t var) const {
  if (var >= chart_->dim()) throw DimensionError("derivative variable out of range");
  Poly r(chart_);
  for (const auto& [m, c] : t_) {
    if (m[var] == 0) continue;
    Mono mm = m;
    mm[var] -= 1;
    r.add_term(mm, c * Rat(m[var]));
  }
  return r;
}

Rat Poly::eval(const std::vector<Rat>& point) const {
  if (point.size() != chart_->dim())
    throw DimensionError("point length != chart dimension");
  Rat acc = 0;
  for (const auto& [m, c] : t_) {
    Rat term = c;
    for (std::size_t i = 0; i < m.size(); ++i)
      for (std::uint32_t e = 0; e < m[i]; ++e) term *= point[i];
    acc += term;
  }
  return acc;
}

unsigned Poly::total_degree() const {
  return t_.empty() ? 0u : mono_degree(t_.rbegin()->first);
}

const Mono& Poly::leading_mono() const {
  if (t_.empty()) throw Error("leading_mono of zero polynomial");
  return t_.rbegin()->first;
}

const Rat& Poly::leading_coeff() const {
  if (t_.empty()) throw Error("leading_coeff of zero polynomial");
  return t_.rbegin()->second;
}

Rat Poly::content() const {
  if (t_.empty()) return 0;
  Int g = 0, l = 1;
  for (const auto& [m, c] : t_) {
    g = boost::multiprecision::gcd(g, boost::multiprecision::abs(rat_num(c)));
    l = boost::multiprecision::lcm(l, rat_den(c));
  }
  return Rat(g, l);
}

Mono Poly::min_exponents() const {
  Mono m(chart_->dim(), 0);
  if (t_.empty()) return m;
  bool first = true;
  for (const auto& [mm, c] : t_) {
    if (first) {
      m = mm;
      first = false;
    } else {
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::min(m[i], mm[i]);
    }
  }
  return m;
}

Poly Poly::shift_down(const Mono& m) const {
  Poly r(chart_);
  for (const auto& [mm, c] : t_) {
    Mono nm = mm;
    for (std::size_t i = 0; i < nm.size(); ++i) {
      if (nm[i] < m[i]) throw Error("shift_down: monomial not divisible");
      nm[i] -= m[i];
    }
    r.t_.emplace(nm, c);
  }
  return r;
}

bool Poly::try_divide_exact(const Poly& a, const Poly& b, Poly& quot) {
  require_compatible(a.chart_, b.chart_, "Poly::try_divide_exact");
  if (b.is_zero()) throw Error("division by zero polynomial");
  Poly q(a.chart_);
  Poly rem = a;
  const Mono& lb = b.leading_mono();
  const Rat& cb = b.leading_coeff();
  Mono qm(a.chart_->dim());
  while (!rem.is_zero()) {
    const Mono& lr = rem.leading_mono();
    for (std::size_t i = 0; i < qm.size(); ++i) {
      if (lr[i] < lb[i]) return false;
      qm[i] = lr[i] - lb[i];
    }
    Rat qc = rem.leading_coeff() / cb;
    Poly t = Poly::monomial(a.chart_, qm, qc);
    q = q + t;
    rem = rem - t * b;
  }
  quot = std::move(q);
  return true;
}

std::string Poly::str() const {
  if (t_.empty()) return "0";
  std::string out;
  // descending graded-lex: leading term first
  for (auto it = t_.rbegin(); it != t_.rend(); ++it) {
    const Mono& m = it->first;
    const Rat& c = it->second;
    bool neg = c < 0;
    Rat mag = neg ? Rat(-c) : c;
    if (out.empty())
      out += neg ? "-" : "";
    else
      out += neg ? " - " : " + ";
    std::string factors;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i] == 0) continue;
      if (!factors.empty()) factors += "*";
      factors += chart_->var(i);
      if (m[i] > 1) factors += "^" + std::to_string(m[i]);
    }
    if (factors.empty()) {
      out += rat_str(mag);
    } else if (mag == 1) {
      out += factors;
    } else {
      out += rat_str(mag) + "*" + factors;
    }
  }
  return out;
}

}  // namespace cartan
