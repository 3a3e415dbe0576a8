#include "cartan/chart.hpp"

#include <set>

#include "cartan/poly.hpp"
#include "cartan/ratfn.hpp"

namespace cartan {

Chart::~Chart() = default;

ChartPtr Chart::make(std::vector<std::string> vars) {
  std::set<std::string> seen;
  for (const auto& v : vars) {
    if (v.empty()) throw SchemaError("empty variable name");
    if (!seen.insert(v).second)
      throw SchemaError("duplicate variable name: " + v);
  }
  auto c = std::shared_ptr<Chart>(new Chart());
  c->vars_ = std::move(vars);
  return c;
}

ChartPtr Chart::make(std::vector<std::string> vars,
                     const std::vector<std::string>& nonvanishing) {
  ChartPtr base = make(std::move(vars));
  std::vector<Poly> nv;
  nv.reserve(nonvanishing.size());
  for (const auto& e : nonvanishing) {
    Poly p = parse_poly(e, base);
    if (p.is_zero())
      throw SchemaError("nonvanishing entry is the zero polynomial: " + e);
    nv.push_back(std::move(p));
  }
  return make_with(base->vars(), std::move(nv));
}

ChartPtr Chart::make_with(std::vector<std::string> vars,
                          std::vector<Poly> nonvanishing) {
  ChartPtr base = make(std::move(vars));
  auto c = std::shared_ptr<Chart>(new Chart());
  c->vars_ = base->vars();
  c->nonvanishing_ = std::move(nonvanishing);
  return c;
}

std::optional<std::size_t> Chart::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < vars_.size(); ++i)
    if (vars_[i] == name) return i;
  return std::nullopt;
}

std::size_t Chart::index_of_checked(const std::string& name) const {
  auto i = index_of(name);
  if (!i) throw SchemaError("unknown variable: " + name);
  return *i;
}

}  // namespace cartan
