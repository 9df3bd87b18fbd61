#include "impatience/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "impatience/error.hpp"
#include "impatience/provenance.hpp"

namespace impatience {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& section, const std::set<std::string>& known) {
  if (!obj.is_object()) throw ValidationError(section, "must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (!known.count(key)) {
      throw ValidationError(section.empty() ? key : section + "." + key, "unknown key");
    }
  }
}

template <class T>
void read(const json& obj, const std::string& section, const char* key, T& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ValidationError(section + "." + key, "has the wrong type");
  }
}

void read_count(const json& obj, const std::string& section, const char* key, std::size_t& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_number_integer() || it->get<long long>() < 0) {
    throw ValidationError(section + "." + key, "must be a non-negative integer");
  }
  out = it->get<std::size_t>();
}

void read_distribution(const json& obj, const std::string& section, const char* key, PriceDistribution& out) {
  std::string text;
  read(obj, section, key, text);
  if (!text.empty()) out = PriceDistribution::parse(text);
}

void parse_simulation(const json& j, SimConfig& s) {
  const std::string sec = "simulation";
  reject_unknown(j, sec,
                 {"n_users", "auctions_per_user", "auction_count", "activity_ratio", "value_per_conversion",
                  "base_conversion_prob", "fatigue_decay", "competition", "initial_exposure", "buckets"});
  read_count(j, sec, "n_users", s.n_users);
  read(j, sec, "auctions_per_user", s.auctions_per_user.mean);
  std::string kind;
  read(j, sec, "auction_count", kind);
  if (kind == "poisson") {
    s.auctions_per_user.kind = AuctionCountSpec::Kind::poisson;
  } else if (kind == "fixed") {
    s.auctions_per_user.kind = AuctionCountSpec::Kind::fixed;
  } else if (!kind.empty()) {
    throw ValidationError(sec + ".auction_count", "must be 'poisson' or 'fixed'");
  }
  read(j, sec, "activity_ratio", s.activity_ratio);
  read(j, sec, "value_per_conversion", s.value_per_conversion);
  read(j, sec, "base_conversion_prob", s.base_conversion_prob);
  read(j, sec, "fatigue_decay", s.fatigue_decay);
  read_distribution(j, sec, "competition", s.competition);
  read(j, sec, "initial_exposure", s.initial_exposure);
  if (j.contains("buckets")) {
    std::vector<int> b;
    read(j, sec, "buckets", b);
    s.buckets = ExposureBuckets(std::move(b));
  }
}

void parse_experiment(const json& j, ExperimentSettings& e) {
  const std::string sec = "experiment";
  reject_unknown(j, sec,
                 {"seed", "resamples", "level", "cap", "sweep", "value_metric", "ab_users", "common_random_numbers",
                  "profile_alphas", "profile_samples"});
  if (auto it = j.find("seed"); it != j.end()) {
    if (!it->is_number_unsigned()) throw ValidationError(sec + ".seed", "must be a non-negative integer");
    e.seed = it->get<std::uint64_t>();
  }
  read_count(j, sec, "resamples", e.resamples);
  read(j, sec, "level", e.level);
  read(j, sec, "cap", e.cap);
  read(j, sec, "sweep", e.sweep);
  std::string metric;
  read(j, sec, "value_metric", metric);
  if (!metric.empty()) e.value_metric = parse_metric(metric);
  read_count(j, sec, "ab_users", e.ab_users);
  read(j, sec, "common_random_numbers", e.common_random_numbers);
  read(j, sec, "profile_alphas", e.profile_alphas);
  read_count(j, sec, "profile_samples", e.profile_samples);
}

json auction_count_json(const AuctionCountSpec& a) {
  return a.kind == AuctionCountSpec::Kind::poisson ? "poisson" : "fixed";
}

}  // namespace

void ExperimentConfig::validate() const {
  simulation.validate();
  randomization.validate();
  const auto& e = experiment;
  if (e.resamples < 100) throw ValidationError("experiment.resamples", "must be >= 100");
  if (!(e.level > 0.0 && e.level < 1.0)) throw ValidationError("experiment.level", "must lie in (0, 1)");
  if (!(e.cap >= 0.0 && e.cap < 1.0)) throw ValidationError("experiment.cap", "must lie in [0, 1)");
  for (double d : e.sweep) {
    if (!(d >= 0.0 && d < 1.0)) throw ValidationError("experiment.sweep", "every amplitude must lie in [0, 1)");
  }
  if (e.value_metric == Metric::cost) throw ValidationError("experiment.value_metric", "must be a value metric");
  if (e.ab_users < 2) throw ValidationError("experiment.ab_users", "must be >= 2");
  for (double a : e.profile_alphas) {
    if (!(a > 0.0)) throw ValidationError("experiment.profile_alphas", "every alpha must be > 0");
  }
  if (e.profile_samples < 2) throw ValidationError("experiment.profile_samples", "must be >= 2");
  if (!(predictor.l2 >= 0.0)) throw ValidationError("predictor.l2", "must be >= 0");
  if (predictor.max_iters < 1) throw ValidationError("predictor.max_iters", "must be >= 1");
  if (!(predictor.tol > 0.0)) throw ValidationError("predictor.tol", "must be > 0");
  FatigueEncoding check(predictor.fatigue_buckets);
  if (!(two_auctions.ticket_value > 0.0)) throw ValidationError("two_auctions.ticket_value", "must be > 0");
  if (!(two_auctions.grid_step > 0.0)) throw ValidationError("two_auctions.grid_step", "must be > 0");
}

std::string ExperimentConfig::canonical_json() const {
  const auto& s = simulation;
  const auto& e = experiment;
  json j = {
      {"simulation",
       {{"n_users", s.n_users},
        {"auctions_per_user", s.auctions_per_user.mean},
        {"auction_count", auction_count_json(s.auctions_per_user)},
        {"activity_ratio", s.activity_ratio},
        {"value_per_conversion", s.value_per_conversion},
        {"base_conversion_prob", s.base_conversion_prob},
        {"fatigue_decay", s.fatigue_decay},
        {"competition", s.competition.to_string()},
        {"initial_exposure", s.initial_exposure},
        {"buckets", s.buckets.lower_bounds()}}},
      {"randomization", {{"mu", randomization.mu}, {"sigma", randomization.sigma}}},
      {"experiment",
       {{"seed", e.seed},
        {"resamples", e.resamples},
        {"level", e.level},
        {"cap", e.cap},
        {"sweep", e.sweep},
        {"value_metric", std::string(to_string(e.value_metric))},
        {"ab_users", e.ab_users},
        {"common_random_numbers", e.common_random_numbers},
        {"profile_alphas", e.profile_alphas},
        {"profile_samples", e.profile_samples}}},
      {"predictor",
       {{"l2", predictor.l2},
        {"max_iters", predictor.max_iters},
        {"tol", predictor.tol},
        {"fatigue_buckets", predictor.fatigue_buckets}}},
      {"two_auctions",
       {{"ticket_value", two_auctions.ticket_value},
        {"first", two_auctions.first.to_string()},
        {"second", two_auctions.second.to_string()},
        {"grid_step", two_auctions.grid_step}}},
  };
  return j.dump();
}

std::string ExperimentConfig::hash() const { return content_hash(canonical_json()); }

ExperimentConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("invalid JSON: ") + e.what());
  }
  reject_unknown(j, "", {"simulation", "randomization", "experiment", "predictor", "two_auctions"});

  ExperimentConfig c;
  if (auto it = j.find("simulation"); it != j.end()) parse_simulation(*it, c.simulation);
  if (auto it = j.find("randomization"); it != j.end()) {
    reject_unknown(*it, "randomization", {"mu", "sigma"});
    read(*it, "randomization", "mu", c.randomization.mu);
    read(*it, "randomization", "sigma", c.randomization.sigma);
  }
  if (auto it = j.find("experiment"); it != j.end()) parse_experiment(*it, c.experiment);
  if (auto it = j.find("predictor"); it != j.end()) {
    const std::string sec = "predictor";
    reject_unknown(*it, sec, {"l2", "max_iters", "tol", "fatigue_buckets"});
    read(*it, sec, "l2", c.predictor.l2);
    read(*it, sec, "max_iters", c.predictor.max_iters);
    read(*it, sec, "tol", c.predictor.tol);
    read(*it, sec, "fatigue_buckets", c.predictor.fatigue_buckets);
  }
  if (auto it = j.find("two_auctions"); it != j.end()) {
    const std::string sec = "two_auctions";
    reject_unknown(*it, sec, {"ticket_value", "first", "second", "grid_step"});
    read(*it, sec, "ticket_value", c.two_auctions.ticket_value);
    read_distribution(*it, sec, "first", c.two_auctions.first);
    read_distribution(*it, sec, "second", c.two_auctions.second);
    read(*it, sec, "grid_step", c.two_auctions.grid_step);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(0, path.string() + ": " + e.what());
  }
}

}  // namespace impatience
