#pragma once

// Capped, cost-neutral reallocation of bid multipliers across clusters.
//
// With x_S = alpha_S - 1 the problem is the linear program
//   maximize sum_S x_S dvalue_S
//   subject to sum_S x_S dcost_S = 0,  -cap <= x_S <= cap.
// Sorting by dvalue/dcost and pushing the best clusters up and the worst
// down, with one interior cluster closing the cost gap, is optimal.

#include <optional>
#include <string>
#include <vector>

#include "impatience/domain.hpp"
#include "impatience/estimators.hpp"

namespace impatience {

struct ClusterMarginal {
  int cluster = 0;
  double dcost = 0.0;
  double dvalue = 0.0;
  /// False when the cluster's mROI was undefined; such clusters stay at 1.
  bool roi_defined = true;
};

struct ReallocationProblem {
  std::vector<ClusterMarginal> clusters;
  double cap_delta = 0.2;
};

ReallocationProblem problem_from(const ClusterEstimates& estimates, double cap_delta);

struct ReallocationResult {
  PolicySpec policy;
  double predicted_dvalue = 0.0;
  double predicted_dcost = 0.0;
  /// Clusters pinned at 1 because dcost <= 0 or the mROI was undefined.
  std::vector<int> frozen;
  bool feasible = true;
  std::string diagnostic;
};

/// Never throws on infeasibility: returns the all-ones policy with
/// feasible = false and a diagnostic instead.
ReallocationResult solve_reallocation(const ReallocationProblem& problem);

struct PolicyDelta {
  double dvalue_linear = 0.0;
  double dcost_linear = 0.0;
  double dvalue_exact = 0.0;
  double dcost_exact = 0.0;
};

/// Throws ValidationError when the policy names a cluster the log does not have.
PolicyDelta predict_policy_delta(const PreparedLog& log, const PolicySpec& policy,
                                 Metric value_metric = Metric::value_predicted);

}  // namespace impatience
