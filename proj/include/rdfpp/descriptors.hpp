#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "rdfpp/distortion.hpp"
#include "rdfpp/forward.hpp"
#include "rdfpp/marginal.hpp"
#include "rdfpp/market.hpp"

namespace rdfpp {

using json = nlohmann::json;

// {"family": "tversky_kahneman", "delta": 0.69}, {"family": "tversky_fox", "a": 0.65, "delta": 0.6},
// {"family": "prelec", "alpha": 0.65, "beta": 0.74}, {"family": "identity"},
// {"family": "tabulated", "p": [...], "w": [...]} or {"family": "tabulated", "csv": "file.csv"}
json to_json(const WeightingFunction& w);
WeightingFunction weighting_from_json(const json& j, const std::string& base_dir = ".");

// {"kernel": "lognormal", "lambda": 0.4}
json to_json(const LognormalKernel& k);
LognormalKernel kernel_from_json(const json& j);

// {"type": "power_law", "gamma": 0.5}
// {"type": "special_cmim", "atoms": [[gamma, mass], ...],
//  "density": [{"lo": 0.5, "hi": 2, "terms": [[coef, power], ...]}]}
// {"type": "bernstein_cmim", "atoms": [[z, mass], ...], "terms": [[coef, power, rate], ...]}
// {"type": "bernstein_example", "z0": 5, "alpha": 0.5, "beta": 0.8}
// {"type": "tabulated", "y": [...], "value": [...]}
// Any variant may carry "scale".
json to_json(const InverseMarginal& m);
InverseMarginal marginal_from_json(const json& j);

// {"weighting": {...}, "lambda": 0.4}; "kernel": {...} is accepted in place of lambda
json to_json(const PeriodSpec& p);
PeriodSpec period_from_json(const json& j, const std::string& base_dir = ".");

json to_json(const PeriodReport& r);
json to_json(const ForwardState& s);
ForwardState state_from_json(const json& j);

// 64-bit FNV-1a
std::uint64_t fnv1a(const std::string& s);
std::string hex64(std::uint64_t v);

}  // namespace rdfpp
