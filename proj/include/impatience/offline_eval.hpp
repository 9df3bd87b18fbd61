#pragma once

// Offline evaluation of reallocation policies: exact IPS and linearized
// deltas of value and cost against the logged (all-ones) policy, with
// bootstrap intervals drawn from one shared set of user resamples.

#include <vector>

#include "impatience/bootstrap.hpp"
#include "impatience/domain.hpp"
#include "impatience/estimators.hpp"
#include "impatience/optimizer.hpp"

namespace impatience {

struct OfflineEvalRow {
  double cap_delta = 0.0;
  PolicySpec policy;
  bool feasible = true;
  Interval dvalue_linear;
  Interval dcost_linear;
  Interval dvalue_exact;
  Interval dcost_exact;
};

/// Evaluates fixed policies. The policies are not re-estimated inside the
/// resamples; the intervals describe the estimator noise for a given policy.
std::vector<OfflineEvalRow> offline_eval(const PreparedLog& log, const std::vector<PolicySpec>& policies,
                                         Metric value_metric, const BootstrapOptions& options);

/// For each cap in `sweep`, re-solves the reallocation from `estimates` at
/// that cap and evaluates the result.
std::vector<OfflineEvalRow> amplitude_sweep(const PreparedLog& log, const ClusterEstimates& estimates,
                                            const std::vector<double>& sweep, Metric value_metric,
                                            const BootstrapOptions& options);

}  // namespace impatience
