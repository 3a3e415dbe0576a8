#include "cartan/ratfn.hpp"

#include "cartan/errors.hpp"

namespace cartan {

RatFn::RatFn(Poly num, Poly den) : num_(std::move(num)), den_(std::move(den)) {
  require_compatible(num_.chart(), den_.chart(), "RatFn");
  if (den_.is_zero()) throw Error("division by zero polynomial");
  canon();
}

RatFn RatFn::constant(ChartPtr chart, const Rat& c) {
  return RatFn(Poly::constant(std::move(chart), c));
}

RatFn RatFn::variable(ChartPtr chart, std::size_t index) {
  return RatFn(Poly::variable(std::move(chart), index));
}

Rat RatFn::constant_value() const {
  return num_.constant_value() / den_.constant_value();
}

void RatFn::canon() {
  if (num_.is_zero()) {
    den_ = Poly::constant(num_.chart(), 1);
    return;
  }
  // shared monomial factor
  Mono mn = num_.min_exponents(), md = den_.min_exponents();
  Mono common(mn.size());
  bool any = false;
  for (std::size_t i = 0; i < mn.size(); ++i) {
    common[i] = std::min(mn[i], md[i]);
    any = any || common[i] > 0;
  }
  if (any) {
    num_ = num_.shift_down(common);
    den_ = den_.shift_down(common);
  }
  // scale so den has coprime integer coefficients and positive lead
  Rat c = den_.content();
  if (den_.leading_coeff() < 0) c = -c;
  if (c != 1) {
    Rat inv = Rat(1) / c;
    num_ = num_ * inv;
    den_ = den_ * inv;
  }
}

RatFn RatFn::operator-() const {
  RatFn r = *this;
  r.num_ = -r.num_;
  return r;
}

RatFn RatFn::operator+(const RatFn& o) const {
  require_compatible(chart(), o.chart(), "RatFn::operator+");
  if (den_.identical(o.den_)) return RatFn(num_ + o.num_, den_);
  return RatFn(num_ * o.den_ + o.num_ * den_, den_ * o.den_);
}

RatFn RatFn::operator-(const RatFn& o) const {
  require_compatible(chart(), o.chart(), "RatFn::operator-");
  if (den_.identical(o.den_)) return RatFn(num_ - o.num_, den_);
  return RatFn(num_ * o.den_ - o.num_ * den_, den_ * o.den_);
}

RatFn RatFn::operator*(const RatFn& o) const {
  require_compatible(chart(), o.chart(), "RatFn::operator*");
  if (is_zero() || o.is_zero()) return zero(chart());
  return RatFn(num_ * o.num_, den_ * o.den_);
}

RatFn RatFn::operator/(const RatFn& o) const {
  require_compatible(chart(), o.chart(), "RatFn::operator/");
  if (o.is_zero()) throw Error("division by zero rational function");
  if (is_zero()) return zero(chart());
  return RatFn(num_ * o.den_, den_ * o.num_);
}

RatFn RatFn::operator*(const Rat& c) const {
  if (c == 0) return zero(chart());
  return RatFn(num_ * c, den_);
}

RatFn RatFn::inverse() const {
  if (is_zero()) throw Error("inverse of zero rational function");
  return RatFn(den_, num_);
}

RatFn RatFn::pow(long e) const {
  if (e < 0) return inverse().pow(-e);
  RatFn r = one(chart());
  RatFn base = *this;
  unsigned long k = static_cast<unsigned long>(e);
  while (k) {
    if (k & 1ul) r = r * base;
    base = base * base;
    k >>= 1ul;
  }
  return r;
}

bool RatFn::eq(const RatFn& o) const {
  return (num_ * o.den_ - o.num_ * den_).is_zero();
}

RatFn RatFn::deriv(std::size_t var) const {
  // quotient rule; canonical form restored by the constructor
  return RatFn(num_.deriv(var) * den_ - num_ * den_.deriv(var), den_ * den_);
}

RatFn RatFn::deriv(const std::string& var) const {
  return deriv(chart()->index_of_checked(var));
}

Rat RatFn::eval(const std::vector<Rat>& point) const {
  for (const auto& nv : chart()->nonvanishing())
    if (nv.eval(point) == 0)
      throw EvalError("point violates nonvanishing constraint: " + nv.str());
  Rat d = den_.eval(point);
  if (d == 0) throw EvalError("denominator vanishes at the point");
  return num_.eval(point) / d;
}

namespace {
RatFn eval_poly_over(const Poly& p, const std::vector<RatFn>& values,
                     const ChartPtr& target) {
  RatFn acc = RatFn::zero(target);
  for (const auto& [m, c] : p.terms()) {
    RatFn term = RatFn::constant(target, c);
    for (std::size_t i = 0; i < m.size(); ++i)
      for (std::uint32_t e = 0; e < m[i]; ++e) term = term * values[i];
    acc = acc + term;
  }
  return acc;
}
}  // namespace

RatFn RatFn::subst(const std::vector<RatFn>& values) const {
  if (values.size() != chart()->dim())
    throw DimensionError("subst: wrong number of values");
  ChartPtr target = values.empty() ? chart() : values.front().chart();
  for (const auto& v : values)
    require_compatible(target, v.chart(), "RatFn::subst");
  RatFn dn = eval_poly_over(den_, values, target);
  if (dn.is_zero())
    throw EvalError("substitution produces an identically-zero denominator");
  RatFn nm = eval_poly_over(num_, values, target);
  return nm / dn;
}

std::string RatFn::str() const {
  if (den_.is_constant() && den_.constant_value() == 1) return num_.str();
  return "(" + num_.str() + ")/(" + den_.str() + ")";
}

}  // namespace cartan
