#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ncer/model.hpp"

namespace ncer {

/// A named (mu, F) pair ready for the rate and simulation routines.
struct ModelSpec {
  std::string id;
  FiniteDistribution dist;
  Observable obs;
};

/// Built-in models, centered:
///   rademacher-product  X uniform on {-1, 1}, F = x_1 ... x_ell
///   bernoulli-product   X uniform on {0, 1},  F = x_1 ... x_ell - 2^-ell
///   indicator-match     X uniform on {-1, 1}, F = 1{x_1 = ... = x_ell} - mean
ModelSpec preset(const std::string& name, int ell);
std::vector<std::string> preset_names();

/// Parses the JSON model description
///
///   { "values": [...], "probs": [...], "ell": 2,
///     "kind": "product" | "indicator_equal" | "table",
///     "table": [...],            // kind = table: row-major, length s^ell
///     "center": true,            // optional, default true
///     "id": "name" }             // optional
///
/// `ell_override`, when set, replaces the file's ell (not allowed for tables).
ModelSpec parse_model_spec(const std::string& json_text, std::optional<int> ell_override = std::nullopt);
ModelSpec load_model_spec(const std::filesystem::path& path, std::optional<int> ell_override = std::nullopt);

}  // namespace ncer
