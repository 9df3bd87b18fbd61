#include "impatience/policy_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "impatience/error.hpp"

namespace impatience {

namespace {
using nlohmann::json;
}

void write_policy(const PolicyFile& file, std::ostream& out) {
  file.policy.validate();
  json multipliers = json::object();
  for (const auto& [c, a] : file.policy.multipliers) multipliers[std::to_string(c)] = a;
  json j = {
      {"schema", kPolicySchema},
      {"cap_delta", file.policy.cap_delta},
      {"multipliers", multipliers},
      {"source_log_hash", file.policy.source_log_hash},
      {"tool", file.provenance.tool},
      {"config_hash", file.provenance.config_hash},
      {"frozen", file.frozen},
  };
  if (file.predicted_dvalue) j["predicted_dvalue"] = *file.predicted_dvalue;
  if (file.predicted_dcost) j["predicted_dcost"] = *file.predicted_dcost;
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed");
}

void write_policy(const PolicyFile& file, const std::filesystem::path& destination) {
  std::ofstream out(destination, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + destination.string() + "' for writing");
  write_policy(file, out);
}

PolicyFile read_policy(std::istream& in) {
  std::ostringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("invalid policy JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(0, "policy file must hold a JSON object");
  static const std::set<std::string> known{"schema", "cap_delta", "multipliers", "source_log_hash", "tool",
                                           "config_hash", "frozen", "predicted_dvalue", "predicted_dcost"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ValidationError(key, "unknown key in policy file");
  }
  if (j.value("schema", std::string{}) != kPolicySchema) {
    throw ParseError(0, "policy file schema must be '" + std::string(kPolicySchema) + "'");
  }
  PolicyFile f;
  try {
    f.policy.cap_delta = j.at("cap_delta").get<double>();
    for (const auto& [key, value] : j.at("multipliers").items()) {
      int c = 0;
      const auto res = std::from_chars(key.data(), key.data() + key.size(), c);
      if (res.ec != std::errc() || res.ptr != key.data() + key.size()) {
        throw ValidationError("multipliers", "cluster key '" + key + "' is not an integer");
      }
      f.policy.multipliers[c] = value.get<double>();
    }
    f.policy.source_log_hash = j.value("source_log_hash", std::string{});
    f.provenance.tool = j.value("tool", std::string{});
    f.provenance.config_hash = j.value("config_hash", std::string{});
    if (j.contains("frozen")) f.frozen = j.at("frozen").get<std::vector<int>>();
    if (j.contains("predicted_dvalue")) f.predicted_dvalue = j.at("predicted_dvalue").get<double>();
    if (j.contains("predicted_dcost")) f.predicted_dcost = j.at("predicted_dcost").get<double>();
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("malformed policy file: ") + e.what());
  }
  f.policy.validate();
  return f;
}

PolicyFile read_policy(const std::filesystem::path& source) {
  std::ifstream in(source, std::ios::binary);
  if (!in) throw IoError("cannot open '" + source.string() + "' for reading");
  return read_policy(in);
}

}  // namespace impatience
