#include "impatience/domain.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "impatience/error.hpp"

namespace impatience {

void RandomizationSpec::validate() const {
  if (!std::isfinite(mu)) throw ValidationError("mu", "must be finite");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("sigma", "must be finite and > 0");
}

ExposureBuckets::ExposureBuckets() : lower_bounds_{0, 1, 2, 3, 4, 5} {}

ExposureBuckets::ExposureBuckets(std::vector<int> lower_bounds) : lower_bounds_(std::move(lower_bounds)) {
  if (lower_bounds_.empty()) throw ValidationError("buckets", "at least one bucket is required");
  if (lower_bounds_.front() != 0) throw ValidationError("buckets", "first lower bound must be 0");
  for (std::size_t i = 1; i < lower_bounds_.size(); ++i) {
    if (lower_bounds_[i] <= lower_bounds_[i - 1]) {
      throw ValidationError("buckets", "lower bounds must be strictly increasing");
    }
  }
}

int ExposureBuckets::bucket_of(int exposure) const {
  if (exposure < 0) throw ValidationError("exposure", "must be >= 0");
  auto it = std::upper_bound(lower_bounds_.begin(), lower_bounds_.end(), exposure);
  return static_cast<int>(it - lower_bounds_.begin()) - 1;
}

std::string ExposureBuckets::label(int bucket) const {
  const auto b = static_cast<std::size_t>(bucket);
  if (b + 1 == lower_bounds_.size()) return std::to_string(lower_bounds_[b]) + "+";
  const int lo = lower_bounds_[b];
  const int hi = lower_bounds_[b + 1] - 1;
  return lo == hi ? std::to_string(lo) : std::to_string(lo) + "-" + std::to_string(hi);
}

void RandomizedLog::validate() const {
  spec.validate();
  std::unordered_set<std::string> seen;
  seen.reserve(users.size());
  for (const auto& u : users) {
    if (!(u.theta > 0.0) || !std::isfinite(u.theta)) throw ValidationError("theta", "must be finite and > 0");
    if (u.exposure_at_start < 0) throw ValidationError("exposure_at_start", "must be >= 0");
    if (u.cluster != buckets.bucket_of(u.exposure_at_start)) {
      throw ValidationError("cluster", "does not match the bucket of exposure_at_start");
    }
    if (!(u.cost >= 0.0) || !std::isfinite(u.cost)) throw ValidationError("cost", "must be finite and >= 0");
    if (!(u.value_observed >= 0.0) || !std::isfinite(u.value_observed)) {
      throw ValidationError("value_observed", "must be finite and >= 0");
    }
    if (!(u.value_predicted >= 0.0) || !std::isfinite(u.value_predicted)) {
      throw ValidationError("value_predicted", "must be finite and >= 0");
    }
    if (u.n_auctions < 0) throw ValidationError("n_auctions", "must be >= 0");
    if (u.n_wins < 0 || u.n_wins > u.n_auctions) throw ValidationError("n_wins", "must lie in [0, n_auctions]");
    if (!seen.insert(u.user_id).second) throw ValidationError("user_id", "duplicate id '" + u.user_id + "'");
  }
}

double metric_of(const UserRecord& user, Metric metric) noexcept {
  switch (metric) {
    case Metric::cost: return user.cost;
    case Metric::value_observed: return user.value_observed;
    case Metric::value_predicted: return user.value_predicted;
  }
  return 0.0;
}

std::string_view to_string(Metric metric) noexcept {
  switch (metric) {
    case Metric::cost: return "cost";
    case Metric::value_observed: return "value_observed";
    case Metric::value_predicted: return "value_predicted";
  }
  return "?";
}

Metric parse_metric(std::string_view text) {
  if (text == "cost") return Metric::cost;
  if (text == "value_observed") return Metric::value_observed;
  if (text == "value_predicted") return Metric::value_predicted;
  throw ValidationError("metric", "unknown metric '" + std::string(text) + "'");
}

double PolicySpec::alpha(int cluster) const {
  auto it = multipliers.find(cluster);
  return it == multipliers.end() ? 1.0 : it->second;
}

std::vector<double> PolicySpec::dense(int n_clusters) const {
  std::vector<double> out(static_cast<std::size_t>(n_clusters), 1.0);
  for (const auto& [c, a] : multipliers) {
    if (c < 0 || c >= n_clusters) {
      throw ValidationError("multipliers", "cluster " + std::to_string(c) + " is outside [0, " +
                                               std::to_string(n_clusters) + ")");
    }
    out[static_cast<std::size_t>(c)] = a;
  }
  return out;
}

void PolicySpec::validate() const {
  // A zero cap is the degenerate all-ones policy used at the start of an
  // amplitude sweep.
  if (!(cap_delta >= 0.0 && cap_delta < 1.0)) throw ValidationError("cap_delta", "must lie in [0, 1)");
  for (const auto& [c, a] : multipliers) {
    if (c < 0) throw ValidationError("multipliers", "negative cluster index");
    if (!(a > 0.0) || !std::isfinite(a)) throw ValidationError("multipliers", "alpha must be finite and > 0");
    // Tolerate the last-ulp drift of 1 + x when x sits exactly on the cap.
    const double slack = 1e-12;
    if (a < 1.0 - cap_delta - slack || a > 1.0 + cap_delta + slack) {
      throw ValidationError("multipliers", "alpha for cluster " + std::to_string(c) + " is outside [1 - cap, 1 + cap]");
    }
  }
}

PolicySpec PolicySpec::identity(int n_clusters, double cap_delta) {
  PolicySpec p;
  p.cap_delta = cap_delta;
  for (int c = 0; c < n_clusters; ++c) p.multipliers[c] = 1.0;
  return p;
}

std::string_view to_string(OutcomeSource source) noexcept {
  switch (source) {
    case OutcomeSource::oracle: return "oracle";
    case OutcomeSource::ips_exact: return "ips_exact";
    case OutcomeSource::ips_linear: return "ips_linear";
  }
  return "?";
}

double metric_of(const OutcomeTotals& t, Metric metric) noexcept {
  switch (metric) {
    case Metric::cost: return t.cost;
    case Metric::value_observed: return t.value_observed;
    case Metric::value_predicted: return t.value_predicted;
  }
  return 0.0;
}

double metric_se_of(const OutcomeTotals& t, Metric metric) noexcept {
  switch (metric) {
    case Metric::cost: return t.cost_se;
    case Metric::value_observed: return t.value_observed_se;
    case Metric::value_predicted: return t.value_predicted_se;
  }
  return 0.0;
}

double PolicyOutcome::value(Metric metric) const noexcept { return metric_of(total, metric); }
double PolicyOutcome::value_se(Metric metric) const noexcept { return metric_se_of(total, metric); }

}  // namespace impatience
