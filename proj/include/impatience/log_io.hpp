#pragma once

// Line-delimited JSON log: one header line, then one line per user.
//
//   {"schema":"impatience-log/1","mu":0,"sigma":0.3,"buckets":[0,1,2,3,4,5],
//    "n_users":2,"tool":"impatience 0.1.0","config_hash":"..."}
//   {"user_id":"0","theta":1.02,"exposure_at_start":3,"cluster":3,"cost":4.1,
//    "value_observed":0,"value_predicted":3.2,"n_auctions":21,"n_wins":2}
//
// Doubles are printed in shortest round-trip form, so read_log(write_log(x))
// reproduces x exactly.

#include <filesystem>
#include <iosfwd>
#include <string_view>

#include "impatience/domain.hpp"

namespace impatience {

inline constexpr std::string_view kLogSchema = "impatience-log/1";

void write_log(const RandomizedLog& log, std::ostream& out);
void write_log(const RandomizedLog& log, const std::filesystem::path& destination);

RandomizedLog read_log(std::istream& in);
RandomizedLog read_log(const std::filesystem::path& source);

}  // namespace impatience
