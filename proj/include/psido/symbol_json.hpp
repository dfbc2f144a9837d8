#pragma once

#include <json.hpp>

#include "psido/h_expansion.hpp"

namespace psido {

/// PolySymbol <-> [{"exp": [e1..e2n], "re": r, "im": i}, ...]
nlohmann::json to_json(const PolySymbol& p);
/// `space` is used when the list is empty; otherwise n is read off the exponents.
PolySymbol poly_from_json(const nlohmann::json& j, PhaseSpace space = PhaseSpace{});

/// HExpansion <-> {"order": m, "trunc": K, "n": n, "coeffs": [a_{-m}, ..., a_K]}
nlohmann::json to_json(const HExpansion& a);
HExpansion expansion_from_json(const nlohmann::json& j);

}  // namespace psido
