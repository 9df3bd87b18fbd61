#pragma once

// Shared data types. No algorithms live here beyond validation and
// bucket lookup.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace impatience {

/// Lognormal exploration law: theta = exp(N(mu, sigma^2)).
struct RandomizationSpec {
  double mu = 0.0;
  double sigma = 0.3;

  void validate() const;
  bool operator==(const RandomizationSpec&) const = default;
};

/// Ad-exposure clusters given by their lower bounds. The first bound is 0,
/// bounds are strictly increasing, and the last bucket is open-ended
/// ({0,1,2,3,4,5} reads as 0,1,2,3,4,5+).
class ExposureBuckets {
 public:
  ExposureBuckets();
  explicit ExposureBuckets(std::vector<int> lower_bounds);

  int bucket_of(int exposure) const;
  int count() const noexcept { return static_cast<int>(lower_bounds_.size()); }
  const std::vector<int>& lower_bounds() const noexcept { return lower_bounds_; }
  std::string label(int bucket) const;

  bool operator==(const ExposureBuckets&) const = default;

 private:
  std::vector<int> lower_bounds_;
};

/// One logged user. Metrics are aggregated over all of the user's auctions.
struct UserRecord {
  std::string user_id;
  double theta = 1.0;
  int exposure_at_start = 0;
  int cluster = 0;
  double cost = 0.0;
  double value_observed = 0.0;
  double value_predicted = 0.0;
  int n_auctions = 0;
  int n_wins = 0;

  bool operator==(const UserRecord&) const = default;
};

struct Provenance {
  std::string tool;
  std::string config_hash;

  bool operator==(const Provenance&) const = default;
};

struct RandomizedLog {
  RandomizationSpec spec;
  ExposureBuckets buckets;
  std::vector<UserRecord> users;
  Provenance provenance;

  /// Throws ValidationError naming the first offending field.
  void validate() const;
  bool operator==(const RandomizedLog&) const = default;
};

/// Which per-user quantity plays the role of m_i.
enum class Metric { cost, value_observed, value_predicted };

double metric_of(const UserRecord& user, Metric metric) noexcept;
std::string_view to_string(Metric metric) noexcept;
Metric parse_metric(std::string_view text);

/// Per-cluster bid multipliers with an amplitude cap. Clusters absent from
/// the map bid with multiplier 1.
struct PolicySpec {
  std::map<int, double> multipliers;
  double cap_delta = 0.2;
  std::string source_log_hash;

  double alpha(int cluster) const;
  /// Dense multiplier vector for clusters [0, n_clusters).
  std::vector<double> dense(int n_clusters) const;
  void validate() const;

  static PolicySpec identity(int n_clusters, double cap_delta);

  bool operator==(const PolicySpec&) const = default;
};

/// A point estimate with a confidence interval.
struct Interval {
  double point = 0.0;
  double low = 0.0;
  double high = 0.0;

  double width() const noexcept { return high - low; }
  bool contains(double x) const noexcept { return low <= x && x <= high; }
};

struct ClusterEstimate {
  int cluster = 0;
  std::size_t n_users = 0;
  double dcost = 0.0;
  double dvalue = 0.0;
  /// Empty when |dcost| is below the degeneracy threshold.
  std::optional<double> mroi;
  Interval dcost_ci;
  Interval dvalue_ci;
  Interval mroi_ci;
};

using ClusterEstimates = std::vector<ClusterEstimate>;

enum class OutcomeSource { oracle, ips_exact, ips_linear };

std::string_view to_string(OutcomeSource source) noexcept;

/// Population totals with standard errors.
struct OutcomeTotals {
  double cost = 0.0;
  double value_observed = 0.0;
  double value_predicted = 0.0;
  double cost_se = 0.0;
  double value_observed_se = 0.0;
  double value_predicted_se = 0.0;
  std::size_t n_users = 0;
};

struct PolicyOutcome {
  OutcomeSource source = OutcomeSource::oracle;
  /// Mean over replications of the per-population totals.
  OutcomeTotals total;
  /// Same, restricted to users by start-of-collection cluster.
  std::vector<OutcomeTotals> by_start_cluster;
  /// Same, grouped by the bucket of the user's exposure at the end of the
  /// period. Only the oracle fills this.
  std::vector<OutcomeTotals> by_end_bucket;
  int n_reps = 1;
  std::size_t users_per_rep = 0;

  double value(Metric metric) const noexcept;
  double value_se(Metric metric) const noexcept;
};

double metric_of(const OutcomeTotals& totals, Metric metric) noexcept;
double metric_se_of(const OutcomeTotals& totals, Metric metric) noexcept;

}  // namespace impatience
