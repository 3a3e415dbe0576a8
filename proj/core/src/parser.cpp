#include <cctype>

#include "cartan/errors.hpp"
#include "cartan/ratfn.hpp"

namespace cartan {

namespace {

// recursive-descent parser for the expression grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := ('-'|'+') factor | power
//   power  := atom ('^' ('-')? integer)?
//   atom   := integer | identifier | '(' expr ')'
class Parser {
 public:
  Parser(const std::string& text, ChartPtr chart)
      : s_(text), chart_(std::move(chart)) {}

  RatFn parse() {
    RatFn r = expr();
    skip_ws();
    if (pos_ != s_.size()) throw ParseError("unexpected trailing input", pos_);
    return r;
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < s_.size() && s_[pos_] == c;
  }

  bool accept(char c) {
    if (peek(c)) {
      ++pos_;
      return true;
    }
    return false;
  }

  RatFn expr() {
    RatFn r = term();
    for (;;) {
      if (accept('+'))
        r = r + term();
      else if (accept('-'))
        r = r - term();
      else
        return r;
    }
  }

  RatFn term() {
    RatFn r = factor();
    for (;;) {
      if (accept('*')) {
        r = r * factor();
      } else if (accept('/')) {
        std::size_t at = pos_;
        RatFn d = factor();
        if (d.is_zero()) throw ParseError("division by zero", at);
        r = r / d;
      } else {
        return r;
      }
    }
  }

  RatFn factor() {
    if (accept('-')) return -factor();
    if (accept('+')) return factor();
    return power();
  }

  RatFn power() {
    RatFn base = atom();
    if (accept('^')) {
      bool neg = accept('-');
      skip_ws();
      std::size_t at = pos_;
      if (pos_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_])))
        throw ParseError("expected integer exponent", at);
      long e = 0;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        e = e * 10 + (s_[pos_] - '0');
        if (e > 1000000) throw ParseError("exponent too large", at);
        ++pos_;
      }
      if (neg && base.is_zero())
        throw ParseError("negative exponent of zero", at);
      base = base.pow(neg ? -e : e);
    }
    return base;
  }

  RatFn atom() {
    skip_ws();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      RatFn r = expr();
      skip_ws();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return r;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      Int v(s_.substr(start, pos_ - start));
      return RatFn::constant(chart_, Rat(v));
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      std::string name = s_.substr(start, pos_ - start);
      auto idx = chart_->index_of(name);
      if (!idx) throw ParseError("unknown variable '" + name + "'", start);
      return RatFn::variable(chart_, *idx);
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  const std::string& s_;
  ChartPtr chart_;
  std::size_t pos_ = 0;
};

}  // namespace

RatFn parse_ratfn(const std::string& text, const ChartPtr& chart) {
  return Parser(text, chart).parse();
}

Poly parse_poly(const std::string& text, const ChartPtr& chart) {
  RatFn f = parse_ratfn(text, chart);
  if (!(f.den().is_constant() && f.den().constant_value() == 1))
    throw SchemaError("expected a polynomial expression: " + text);
  return f.num();
}

}  // namespace cartan
