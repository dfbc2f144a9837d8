#include "psido/symbol_json.hpp"

namespace psido {

using nlohmann::json;

json to_json(const PolySymbol& p) {
  if (p.extra_vars() != 0) throw DimensionError("only phase-space polynomials are serialized");
  json out = json::array();
  const int nv = p.nvars();
  for (const auto& [e, c] : p.terms()) {
    std::vector<int> exps(e.begin(), e.begin() + nv);
    out.push_back({{"exp", exps}, {"re", c.real()}, {"im", c.imag()}});
  }
  return out;
}

PolySymbol poly_from_json(const json& j, PhaseSpace space) {
  if (!j.is_array()) throw ConfigError("polynomial symbol must be a JSON array");
  if (!j.empty()) {
    const auto len = j.front().at("exp").size();
    if (len == 0 || len % 2 != 0) throw DimensionError("exponent length must be 2n");
    space = PhaseSpace(static_cast<int>(len / 2));
  }
  PolySymbol p(space);
  for (const auto& term : j) {
    const auto exps = term.at("exp").get<std::vector<int>>();
    if (static_cast<int>(exps.size()) != space.dim()) throw DimensionError("inconsistent exponent lengths");
    p.add_term(make_exponent(exps), Complex(term.at("re").get<double>(), term.at("im").get<double>()));
  }
  return p;
}

json to_json(const HExpansion& a) {
  json coeffs = json::array();
  for (int j = a.lowest_power(); j <= a.trunc(); ++j) coeffs.push_back(to_json(a.coeff(j)));
  return {{"order", a.order()}, {"trunc", a.trunc()}, {"n", a.space().n}, {"coeffs", coeffs}};
}

HExpansion expansion_from_json(const json& j) {
  const int order = j.at("order").get<int>();
  const int trunc = j.at("trunc").get<int>();
  const auto& coeffs = j.at("coeffs");
  PhaseSpace space;
  if (j.contains("n")) {
    space = PhaseSpace(j.at("n").get<int>());
  } else {
    for (const auto& c : coeffs)
      if (!c.empty()) {
        space = PhaseSpace(static_cast<int>(c.front().at("exp").size() / 2));
        break;
      }
  }
  HExpansion out(space, order, trunc);
  if (static_cast<int>(coeffs.size()) != trunc + order + 1)
    throw DimensionError("coefficient count does not match order and truncation");
  int power = -order;
  for (const auto& c : coeffs) out.set_coeff(power++, poly_from_json(c, space));
  return out;
}

}  // namespace psido
