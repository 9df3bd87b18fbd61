#include "impatience/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "impatience/error.hpp"
#include "impatience/kernels.hpp"
#include "impatience/summation.hpp"
#include "impatience/weights.hpp"

namespace impatience {

ReallocationProblem problem_from(const ClusterEstimates& estimates, double cap_delta) {
  ReallocationProblem p;
  p.cap_delta = cap_delta;
  for (const auto& e : estimates) p.clusters.push_back({e.cluster, e.dcost, e.dvalue, e.mroi.has_value()});
  return p;
}

ReallocationResult solve_reallocation(const ReallocationProblem& problem) {
  const double cap = problem.cap_delta;
  if (!(cap >= 0.0 && cap < 1.0)) throw ValidationError("cap_delta", "must lie in [0, 1)");

  ReallocationResult result;
  result.policy.cap_delta = cap;
  std::vector<const ClusterMarginal*> active;
  for (const auto& c : problem.clusters) {
    if (c.cluster < 0) throw ValidationError("cluster", "negative cluster index");
    if (!result.policy.multipliers.emplace(c.cluster, 1.0).second) {
      throw ValidationError("cluster", "cluster " + std::to_string(c.cluster) + " listed twice");
    }
    if (!std::isfinite(c.dcost) || !std::isfinite(c.dvalue)) {
      throw ValidationError("cluster", "non-finite marginal for cluster " + std::to_string(c.cluster));
    }
    if (c.roi_defined && c.dcost > 0.0) {
      active.push_back(&c);
    } else {
      result.frozen.push_back(c.cluster);
    }
  }
  std::sort(result.frozen.begin(), result.frozen.end());

  if (active.empty()) {
    result.feasible = false;
    result.diagnostic = "no cluster has a defined marginal ROI with positive marginal cost; keeping all multipliers at 1";
    return result;
  }
  if (cap == 0.0) return result;

  std::sort(active.begin(), active.end(), [](const ClusterMarginal* a, const ClusterMarginal* b) {
    const double ra = a->dvalue / a->dcost;
    const double rb = b->dvalue / b->dcost;
    if (ra != rb) return ra > rb;
    return a->cluster < b->cluster;
  });
  const double r_hi = active.front()->dvalue / active.front()->dcost;
  const double r_lo = active.back()->dvalue / active.back()->dcost;
  if (r_hi - r_lo <= 1e-12 * std::max(std::abs(r_hi), std::abs(r_lo))) {
    result.diagnostic = "all eligible clusters share one marginal ROI; no reallocation gains value";
    return result;
  }

  // Start everyone at -cap and raise clusters in ratio order until the
  // linearized cost change reaches zero.
  std::vector<double> x(active.size(), -cap);
  CompensatedSum need;
  for (const auto* c : active) need.add(cap * c->dcost);
  std::size_t pivot = active.size();
  for (std::size_t i = 0; i < active.size(); ++i) {
    const double full = 2.0 * cap * active[i]->dcost;
    if (full < need.value()) {
      x[i] = cap;
      need.add(-full);
    } else {
      pivot = i;
      break;
    }
  }
  if (pivot < active.size()) {
    // Solve the pivot so the compensated cost change is zero.
    CompensatedSum others;
    for (std::size_t i = 0; i < active.size(); ++i) {
      if (i == pivot) continue;
      const auto p = two_prod(x[i], active[i]->dcost);
      others.add(p.sum);
      others.add(p.err);
    }
    x[pivot] = std::clamp(-others.value() / active[pivot]->dcost, -cap, cap);
  }

  CompensatedSum dv, dc;
  for (std::size_t i = 0; i < active.size(); ++i) {
    result.policy.multipliers[active[i]->cluster] = 1.0 + x[i];
    dv.add(x[i] * active[i]->dvalue);
    dc.add(x[i] * active[i]->dcost);
  }
  result.predicted_dvalue = dv.value();
  result.predicted_dcost = dc.value();
  return result;
}

PolicyDelta predict_policy_delta(const PreparedLog& log, const PolicySpec& policy, Metric value_metric) {
  if (value_metric == Metric::cost) throw ValidationError("value_metric", "must be a value metric, not cost");
  const auto alpha = policy.dense(log.n_clusters());
  for (double a : alpha) {
    if (!(a > 0.0) || !std::isfinite(a)) throw ValidationError("multipliers", "alpha must be finite and > 0");
  }
  PolicyDelta d;
  CompensatedSum lv, lc;
  for (int c = 0; c < log.n_clusters(); ++c) {
    const double x = alpha[static_cast<std::size_t>(c)] - 1.0;
    if (x == 0.0) continue;
    lv.add(x * marginal_estimate(log, value_metric, c));
    lc.add(x * marginal_estimate(log, Metric::cost, c));
  }
  d.dvalue_linear = lv.value();
  d.dcost_linear = lc.value();
  // sum m_i (w_i - 1) rather than a difference of two large totals.
  std::vector<double> w(log.size());
  const auto z = log.z();
  for (int c = 0; c < log.n_clusters(); ++c) {
    const auto b = log.cluster_begin(c);
    const auto n = log.cluster_size(c);
    const auto coef = exact_weight_coefficients(log.spec(), alpha[static_cast<std::size_t>(c)]);
    kernels::exp_affine(z.subspan(b, n), coef.slope, coef.offset, std::span<double>(w).subspan(b, n));
  }
  for (auto& v : w) v -= 1.0;
  d.dvalue_exact = kernels::dot(log.metric(value_metric), w);
  d.dcost_exact = kernels::dot(log.metric(Metric::cost), w);
  return d;
}

}  // namespace impatience
