#pragma once

// Policy files are a single JSON object:
//
//   {"schema": "impatience-policy/1", "cap_delta": 0.2,
//    "multipliers": {"0": 1.2, "1": 1.2, "2": 0.93, ...},
//    "source_log_hash": "...", "tool": "...", "config_hash": "...",
//    "predicted_dvalue": 12.5, "predicted_dcost": 0, "frozen": [5]}
//
// Only schema, cap_delta and multipliers are required.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "impatience/domain.hpp"

namespace impatience {

inline constexpr std::string_view kPolicySchema = "impatience-policy/1";

struct PolicyFile {
  PolicySpec policy;
  Provenance provenance;
  std::optional<double> predicted_dvalue;
  std::optional<double> predicted_dcost;
  std::vector<int> frozen;
};

void write_policy(const PolicyFile& file, std::ostream& out);
void write_policy(const PolicyFile& file, const std::filesystem::path& destination);

/// Validates the policy (box constraint included) after parsing.
PolicyFile read_policy(std::istream& in);
PolicyFile read_policy(const std::filesystem::path& source);

}  // namespace impatience
