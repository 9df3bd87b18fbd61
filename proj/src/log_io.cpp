#include "impatience/log_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_set>

#include <json.hpp>

#include "impatience/error.hpp"

namespace impatience {
namespace {

using nlohmann::json;

template <class T>
T required(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(line, std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ParseError(line, std::string("field '") + key + "' has the wrong type");
  }
}

// Validation failures on read carry the line number as well as the field.
[[noreturn]] void reject(std::size_t line, const std::string& field, const std::string& what) {
  throw ValidationError(field, "line " + std::to_string(line) + ": " + what);
}

UserRecord parse_user(const json& j, std::size_t line, const ExposureBuckets& buckets) {
  UserRecord u;
  const auto& id = j.find("user_id");
  if (id == j.end()) throw ParseError(line, "missing field 'user_id'");
  u.user_id = id->is_string() ? id->get<std::string>() : id->dump();
  u.theta = required<double>(j, "theta", line);
  u.exposure_at_start = required<int>(j, "exposure_at_start", line);
  u.cluster = required<int>(j, "cluster", line);
  u.cost = required<double>(j, "cost", line);
  u.value_observed = required<double>(j, "value_observed", line);
  u.value_predicted = required<double>(j, "value_predicted", line);
  u.n_auctions = required<int>(j, "n_auctions", line);
  u.n_wins = required<int>(j, "n_wins", line);

  if (!(u.theta > 0.0)) reject(line, "theta", "must be > 0");
  if (u.exposure_at_start < 0) reject(line, "exposure_at_start", "must be >= 0");
  if (u.cluster != buckets.bucket_of(u.exposure_at_start)) {
    reject(line, "cluster", "does not match the bucket of exposure_at_start");
  }
  if (!(u.cost >= 0.0)) reject(line, "cost", "must be >= 0");
  if (!(u.value_observed >= 0.0)) reject(line, "value_observed", "must be >= 0");
  if (!(u.value_predicted >= 0.0)) reject(line, "value_predicted", "must be >= 0");
  if (u.n_auctions < 0) reject(line, "n_auctions", "must be >= 0");
  if (u.n_wins < 0 || u.n_wins > u.n_auctions) reject(line, "n_wins", "must lie in [0, n_auctions]");
  return u;
}

}  // namespace

void write_log(const RandomizedLog& log, std::ostream& out) {
  log.validate();
  json header = {
      {"schema", kLogSchema},
      {"mu", log.spec.mu},
      {"sigma", log.spec.sigma},
      {"buckets", log.buckets.lower_bounds()},
      {"n_users", log.users.size()},
      {"tool", log.provenance.tool},
      {"config_hash", log.provenance.config_hash},
  };
  out << header.dump() << '\n';
  for (const auto& u : log.users) {
    json j = {
        {"user_id", u.user_id},
        {"theta", u.theta},
        {"exposure_at_start", u.exposure_at_start},
        {"cluster", u.cluster},
        {"cost", u.cost},
        {"value_observed", u.value_observed},
        {"value_predicted", u.value_predicted},
        {"n_auctions", u.n_auctions},
        {"n_wins", u.n_wins},
    };
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed");
}

void write_log(const RandomizedLog& log, const std::filesystem::path& destination) {
  std::ofstream out(destination, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + destination.string() + "' for writing");
  write_log(log, out);
  out.flush();
  if (!out) throw IoError("write to '" + destination.string() + "' failed");
}

RandomizedLog read_log(std::istream& in) {
  RandomizedLog log;
  std::string text;
  std::size_t line = 0;
  bool have_header = false;
  std::size_t declared_users = 0;
  std::unordered_set<std::string> ids;

  while (std::getline(in, text)) {
    ++line;
    if (text.empty() || text == "\r") continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(line, "expected a JSON object");

    if (!have_header) {
      const auto schema = required<std::string>(j, "schema", line);
      if (schema != kLogSchema) throw ParseError(line, "unsupported schema '" + schema + "'");
      log.spec.mu = required<double>(j, "mu", line);
      log.spec.sigma = required<double>(j, "sigma", line);
      try {
        log.spec.validate();
        log.buckets = ExposureBuckets(required<std::vector<int>>(j, "buckets", line));
      } catch (const ValidationError& e) {
        reject(line, e.field(), e.what());
      }
      declared_users = j.value("n_users", std::size_t{0});
      log.provenance.tool = j.value("tool", std::string{});
      log.provenance.config_hash = j.value("config_hash", std::string{});
      log.users.reserve(declared_users);
      have_header = true;
      continue;
    }

    UserRecord u = parse_user(j, line, log.buckets);
    if (!ids.insert(u.user_id).second) reject(line, "user_id", "duplicate id '" + u.user_id + "'");
    log.users.push_back(std::move(u));
  }
  if (!have_header) throw ParseError(0, "missing header line");
  if (declared_users != log.users.size()) {
    throw ParseError(line, "header declares " + std::to_string(declared_users) + " users, found " +
                               std::to_string(log.users.size()));
  }
  return log;
}

RandomizedLog read_log(const std::filesystem::path& source) {
  std::ifstream in(source, std::ios::binary);
  if (!in) throw IoError("cannot open '" + source.string() + "' for reading");
  return read_log(in);
}

}  // namespace impatience
