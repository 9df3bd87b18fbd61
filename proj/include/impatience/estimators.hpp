#pragma once

// Counterfactual estimators over a randomized log.
//
// With z_i = (ln theta_i - mu) / sigma^2:
//   exact IPS      M(S, alpha)  ~  sum_{i in S} m_i exp(ln(alpha) z_i - ln(alpha)^2 / (2 sigma^2))
//   marginal       dM/dalpha|1  ~  sum_{i in S} m_i z_i
//   marginal ROI                 =  marginal(value) / marginal(cost)
//
// Both are unbiased only when S does not depend on theta. UserSubset
// therefore accepts predicates over pre-randomization fields only
// (exposure_at_start, cluster); anything else has to go through the
// explicitly unsafe constructor, and the estimators refuse unsafe subsets
// unless the caller opts in.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "impatience/bootstrap.hpp"
#include "impatience/domain.hpp"

namespace impatience {

enum class UserField {
  user_id,
  theta,
  exposure_at_start,
  cluster,
  cost,
  value_observed,
  value_predicted,
  n_auctions,
  n_wins,
};

/// True for fields fixed before theta is drawn.
constexpr bool is_pre_randomization(UserField f) noexcept {
  return f == UserField::exposure_at_start || f == UserField::cluster;
}

class UserSubset {
 public:
  static UserSubset all();
  static UserSubset cluster(int cluster);
  static UserSubset clusters(std::vector<int> clusters);
  /// Predicate on a numeric field. Throws IndependenceViolation when the
  /// field is set after randomization.
  static UserSubset where(UserField field, std::function<bool(double)> predicate);
  /// Arbitrary predicate. Estimates over such a subset are biased whenever
  /// the predicate looks at outcomes; exists to demonstrate exactly that.
  static UserSubset unsafe(std::function<bool(const UserRecord&)> predicate);

  bool is_unsafe() const noexcept { return unsafe_; }
  bool contains(const UserRecord& user) const;

 private:
  UserSubset() = default;
  std::function<bool(const UserRecord&)> predicate_;
  bool unsafe_ = false;
};

enum class SubsetCheck { enforce_independence, allow_unsafe };

/// Columnar copy of a log with users grouped by cluster (stable order
/// within a cluster). Holds a reference to the log for subset predicates;
/// the log must outlive it.
class PreparedLog {
 public:
  explicit PreparedLog(const RandomizedLog& log);

  const RandomizedLog& log() const noexcept { return *log_; }
  const RandomizationSpec& spec() const noexcept { return log_->spec; }
  std::size_t size() const noexcept { return z_.size(); }
  int n_clusters() const noexcept { return static_cast<int>(cluster_offsets_.size()) - 1; }

  /// Linear weights (ln theta - mu) / sigma^2.
  std::span<const double> z() const noexcept { return z_; }
  std::span<const double> metric(Metric m) const noexcept;
  /// Position in log().users of each prepared row.
  std::span<const std::size_t> source_index() const noexcept { return order_; }

  std::size_t cluster_begin(int c) const noexcept { return cluster_offsets_[static_cast<std::size_t>(c)]; }
  std::size_t cluster_end(int c) const noexcept { return cluster_offsets_[static_cast<std::size_t>(c) + 1]; }
  std::size_t cluster_size(int c) const noexcept { return cluster_end(c) - cluster_begin(c); }

  /// 1/0 membership per prepared row. Enforces independence unless told otherwise.
  std::vector<double> mask(const UserSubset& subset, SubsetCheck check = SubsetCheck::enforce_independence) const;

 private:
  const RandomizedLog* log_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> cluster_offsets_;
  std::vector<double> z_, cost_, vobs_, vpred_;
};

struct EstimateWithSe {
  double value = 0.0;
  double se = 0.0;
};

/// Exact IPS estimate of sum_{i in subset} m_i under per-cluster multipliers.
double ips_estimate(const PreparedLog& log, Metric metric, const UserSubset& subset, const PolicySpec& policy,
                    SubsetCheck check = SubsetCheck::enforce_independence);
double ips_estimate(const PreparedLog& log, Metric metric, const UserSubset& subset,
                    std::span<const double> alpha_by_cluster, SubsetCheck check = SubsetCheck::enforce_independence);
double ips_estimate(const RandomizedLog& log, Metric metric, const UserSubset& subset, const PolicySpec& policy,
                    SubsetCheck check = SubsetCheck::enforce_independence);

/// Per-row terms m_i * w_i (0 outside the subset), prepared order.
std::vector<double> ips_terms(const PreparedLog& log, Metric metric, std::span<const double> alpha_by_cluster,
                              std::span<const double> mask);

/// Estimate plus standard error sqrt(n * var(term)).
EstimateWithSe ips_estimate_with_se(const PreparedLog& log, Metric metric, const UserSubset& subset,
                                    std::span<const double> alpha_by_cluster,
                                    SubsetCheck check = SubsetCheck::enforce_independence);

/// Linearized estimate of dM(S, alpha)/dalpha at alpha = 1.
double marginal_estimate(const PreparedLog& log, Metric metric, int cluster);
double marginal_estimate(const PreparedLog& log, Metric metric, const UserSubset& subset,
                         SubsetCheck check = SubsetCheck::enforce_independence);
double marginal_estimate(const RandomizedLog& log, Metric metric, int cluster);
EstimateWithSe marginal_estimate_with_se(const PreparedLog& log, Metric metric, const UserSubset& subset,
                                         SubsetCheck check = SubsetCheck::enforce_independence);

struct MarginalRoi {
  /// Empty when |denominator| <= threshold.
  std::optional<double> ratio;
  double numerator = 0.0;
  double denominator = 0.0;
  double threshold = 0.0;
};

/// Default threshold: 1e-9 times the cluster's total cost.
MarginalRoi marginal_roi(const PreparedLog& log, int cluster, Metric value_metric = Metric::value_predicted,
                         std::optional<double> threshold = std::nullopt);
MarginalRoi marginal_roi(const RandomizedLog& log, int cluster, Metric value_metric = Metric::value_predicted,
                         std::optional<double> threshold = std::nullopt);

/// Per-cluster dcost, dvalue and mROI with user-level percentile bootstrap
/// intervals (one shared set of resamples for all clusters).
ClusterEstimates cluster_estimates(const PreparedLog& log, Metric value_metric, const BootstrapOptions& options);

/// Same without the bootstrap: every interval collapses to its point.
ClusterEstimates cluster_point_estimates(const PreparedLog& log, Metric value_metric);

/// IPS totals (exact or linearized) under per-cluster multipliers, with
/// standard errors, in the same shape as an oracle outcome.
PolicyOutcome ips_policy_outcome(const PreparedLog& log, std::span<const double> alpha_by_cluster,
                                 OutcomeSource source);

}  // namespace impatience
