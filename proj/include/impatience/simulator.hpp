#pragma once

// Generative world of repeated second-price auctions with display fatigue.
//
// Each user arrives with a prior exposure k0 (won displays before the log
// starts), draws a bid multiplier theta ~ Lognormal(mu, sigma) and faces a
// Poisson number of auctions. At current exposure k the impatient bid is
// value_per_conversion * p0 * gamma^k (expected payoff of the display under
// the true conversion model) times theta, times the policy multiplier. The
// user wins when the bid strictly exceeds the competing bid and pays the
// competing bid. A win converts with probability p0 * gamma^k and raises k.
//
// Randomness is split into two streams per user: a user stream (k0, theta,
// auction count) and an auction stream (one competing bid and one
// conversion uniform per auction, consumed whether or not the user wins).
// Policies therefore face identical competition under a shared seed.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "impatience/domain.hpp"
#include "impatience/rng.hpp"

namespace impatience {

/// Distribution of a competing price.
class PriceDistribution {
 public:
  enum class Kind { lognormal, uniform, constant };

  static PriceDistribution lognormal(double mu, double sigma);
  static PriceDistribution uniform(double low, double high);
  static PriceDistribution constant(double value);
  /// "lognormal:MU:SIGMA", "uniform:LOW:HIGH" or "constant:VALUE".
  static PriceDistribution parse(std::string_view text);

  Kind kind() const noexcept { return kind_; }
  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }

  /// P(C < x).
  double cdf_below(double x) const noexcept;
  /// E[C * 1{C < x}].
  double partial_expectation_below(double x) const noexcept;
  double sample(Xoshiro256& rng) const;

  std::string to_string() const;
  bool operator==(const PriceDistribution&) const = default;

 private:
  PriceDistribution(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}
  Kind kind_ = Kind::constant;
  double a_ = 0.0;
  double b_ = 0.0;
};

struct AuctionCountSpec {
  enum class Kind { poisson, fixed };
  Kind kind = Kind::poisson;
  /// Poisson mean (population average) or the fixed count.
  double mean = 20.0;

  bool operator==(const AuctionCountSpec&) const = default;
};

struct SimConfig {
  std::size_t n_users = 100000;
  AuctionCountSpec auctions_per_user;
  /// A user with prior exposure k0 gets a Poisson mean proportional to
  /// activity_ratio^k0, normalised so the population mean stays
  /// auctions_per_user.mean. 1 makes auction volume independent of exposure.
  double activity_ratio = 2.0;
  double value_per_conversion = 100.0;
  double base_conversion_prob = 0.05;
  double fatigue_decay = 0.8;
  PriceDistribution competition = PriceDistribution::lognormal(1.4, 1.25);
  /// Categorical weights over prior exposure 0..K (normalised on use).
  std::vector<double> initial_exposure{0.30, 0.20, 0.15, 0.12, 0.10, 0.08, 0.05};
  ExposureBuckets buckets;

  void validate() const;
  /// p0 * gamma^k.
  double conversion_prob(int exposure) const noexcept;
  /// Expected payoff of a display at exposure k: value_per_conversion * p0 * gamma^k.
  double display_value(int exposure) const noexcept;
  double mean_auctions(int exposure_at_start) const noexcept;

  bool operator==(const SimConfig&) const = default;
};

struct BidPolicy {
  enum class Kind { impatient_randomized, cluster_multiplier };

  Kind kind = Kind::impatient_randomized;
  RandomizationSpec spec;
  /// Multiplier per cluster index (cluster_multiplier only). Zero is allowed
  /// here and means "never win".
  std::vector<double> multipliers;
  /// When set, the multiplier follows the cluster of the user's current
  /// exposure instead of the cluster fixed at the start of the log.
  bool dynamic = false;

  static BidPolicy randomized(const RandomizationSpec& spec);
  static BidPolicy with_multipliers(const RandomizationSpec& spec, std::vector<double> by_cluster,
                                    bool dynamic = false);
  static BidPolicy from_policy(const RandomizationSpec& spec, const PolicySpec& policy, int n_clusters,
                               bool dynamic = false);
  static BidPolicy global(const RandomizationSpec& spec, double alpha, int n_clusters);

  double multiplier(int cluster) const noexcept;
};

/// One won display, for the conversion-model debug trace.
struct DisplayRecord {
  std::uint64_t user_index = 0;
  int exposure = 0;
  double conversion_prob = 0.0;
  bool converted = false;
  double price = 0.0;
  double bid = 0.0;
};

struct UserPath {
  double theta = 1.0;
  int exposure_at_start = 0;
  int exposure_end = 0;
  double cost = 0.0;
  double value_observed = 0.0;
  double value_predicted = 0.0;
  int n_auctions = 0;
  int n_wins = 0;
};

/// Simulates one user of the population identified by population_seed.
UserPath simulate_user(const SimConfig& config, const BidPolicy& policy, std::uint64_t population_seed,
                       std::uint64_t user_index, std::vector<DisplayRecord>* trace = nullptr);

/// Seed of replication `rep` of a run seeded with `seed`. simulate_log uses rep 0.
std::uint64_t population_seed(std::uint64_t seed, std::uint64_t rep) noexcept;

/// Logs the lognormally randomized baseline bidder. Identical arguments give
/// an identical log for any thread count.
RandomizedLog simulate_log(const SimConfig& config, const RandomizationSpec& spec, std::uint64_t seed,
                           unsigned threads = 0);

/// Won displays of the same population simulate_log(config, spec, seed) logs.
std::vector<DisplayRecord> simulate_display_trace(const SimConfig& config, const RandomizationSpec& spec,
                                                  std::uint64_t seed, unsigned threads = 0);

/// Ground truth: mean totals over n_reps independently simulated populations
/// of config.n_users users bidding with `policy`.
PolicyOutcome oracle_policy_outcome(const SimConfig& config, const BidPolicy& policy, int n_reps,
                                    std::uint64_t seed, unsigned threads = 0);

/// Relative change of a treated population against a baseline population.
struct ArmComparison {
  std::size_t users_per_arm = 0;
  bool common_random_numbers = false;
  Metric value_metric = Metric::value_predicted;
  double baseline_value = 0.0;  // per-user means
  double treated_value = 0.0;
  double baseline_cost = 0.0;
  double treated_cost = 0.0;
  double rel_dvalue = 0.0;  // treated / baseline - 1
  double rel_dvalue_se = 0.0;
  double rel_dcost = 0.0;
  double rel_dcost_se = 0.0;
  Interval rel_dvalue_ci;  // 95% normal interval
  Interval rel_dcost_ci;
};

/// Simulated A/B test. Arms are independent populations unless
/// common_random_numbers is set, in which case both arms replay the same
/// users and competition.
ArmComparison ab_compare(const SimConfig& config, const BidPolicy& baseline, const BidPolicy& treated,
                         std::size_t users_per_arm, std::uint64_t seed, bool common_random_numbers = false,
                         Metric value_metric = Metric::value_predicted, unsigned threads = 0);

}  // namespace impatience
