#pragma once

#include <optional>
#include <string>

#include "riskmdp/model.hpp"
#include "riskmdp/risk.hpp"

namespace riskmdp {

/// A parsed model file: the model, the risk measure, and an optional weight
/// function (defaults to 1 on effective states when absent).
struct ModelFile {
    TransientMdp model;
    RiskSpec risk;
    std::optional<WeightFunction> weight;
};

/**
 * Parses the JSON model document:
 *
 *   {
 *     "states": ["s1", ...],
 *     "absorbing": "name",
 *     "controls": {"state": ["u1", ...], ...},
 *     "transitions": [{"x": ., "u": ., "y": ., "p": .}, ...],
 *     "costs":       [{"x": ., "u": ., "y": ., "c": .}, ...],
 *     "weight": {"state": w, ...},                  // optional, entries >= 1
 *     "risk": {"family": "expectation" | "semideviation" | "avar",
 *              "kappa" / "alpha": scalar or {"state": value, ...}}
 *   }
 *
 * Unlisted transitions have probability 0 and unlisted costs are 0.
 * Throws std::invalid_argument with a diagnostic on any schema violation.
 */
ModelFile parse_model_text(const std::string& json_text);

/// Reads and parses a model file from disk.
ModelFile load_model_file(const std::string& path);

/// Parses the command-line risk grammar: "expectation", "semidev:K",
/// "avar:A".
RiskSpec parse_risk_string(const std::string& text);

}  // namespace riskmdp
