#include "impatience/offline_eval.hpp"

#include <cmath>

#include "impatience/error.hpp"
#include "impatience/kernels.hpp"
#include "impatience/weights.hpp"

namespace impatience {

std::vector<OfflineEvalRow> offline_eval(const PreparedLog& log, const std::vector<PolicySpec>& policies,
                                         Metric value_metric, const BootstrapOptions& options) {
  if (value_metric == Metric::cost) throw ValidationError("value_metric", "must be a value metric, not cost");
  const auto n = log.size();
  const auto z = log.z();
  const auto value = log.metric(value_metric);
  const auto cost = log.metric(Metric::cost);

  // Four per-user term vectors per policy: linear dV, linear dC, exact dV, exact dC.
  std::vector<std::vector<double>> terms;
  terms.reserve(4 * policies.size());
  std::vector<double> w(n);
  for (const auto& policy : policies) {
    const auto alpha = policy.dense(log.n_clusters());
    std::vector<double> lv(n), lc(n), ev(n), ec(n);
    for (int c = 0; c < log.n_clusters(); ++c) {
      const double a = alpha[static_cast<std::size_t>(c)];
      if (!(a > 0.0) || !std::isfinite(a)) throw ValidationError("multipliers", "alpha must be finite and > 0");
      const auto b = log.cluster_begin(c);
      const auto len = log.cluster_size(c);
      const auto coef = exact_weight_coefficients(log.spec(), a);
      kernels::exp_affine(z.subspan(b, len), coef.slope, coef.offset, std::span<double>(w).subspan(b, len));
      const double x = a - 1.0;
      for (auto i = b; i < b + len; ++i) {
        lv[i] = x * value[i] * z[i];
        lc[i] = x * cost[i] * z[i];
        ev[i] = value[i] * (w[i] - 1.0);
        ec[i] = cost[i] * (w[i] - 1.0);
      }
    }
    terms.push_back(std::move(lv));
    terms.push_back(std::move(lc));
    terms.push_back(std::move(ev));
    terms.push_back(std::move(ec));
  }

  const WeightedStatistics stat = [&](std::span<const double> mult) {
    std::vector<double> out(terms.size());
    for (std::size_t j = 0; j < terms.size(); ++j) out[j] = kernels::dot(mult, terms[j]);
    return out;
  };
  const auto ci = bootstrap_ci(n, stat, options);

  std::vector<OfflineEvalRow> rows(policies.size());
  for (std::size_t p = 0; p < policies.size(); ++p) {
    auto& r = rows[p];
    r.cap_delta = policies[p].cap_delta;
    r.policy = policies[p];
    r.dvalue_linear = ci[4 * p];
    r.dcost_linear = ci[4 * p + 1];
    r.dvalue_exact = ci[4 * p + 2];
    r.dcost_exact = ci[4 * p + 3];
  }
  return rows;
}

std::vector<OfflineEvalRow> amplitude_sweep(const PreparedLog& log, const ClusterEstimates& estimates,
                                            const std::vector<double>& sweep, Metric value_metric,
                                            const BootstrapOptions& options) {
  std::vector<PolicySpec> policies;
  std::vector<bool> feasible;
  for (double cap : sweep) {
    auto solved = solve_reallocation(problem_from(estimates, cap));
    policies.push_back(std::move(solved.policy));
    feasible.push_back(solved.feasible);
  }
  auto rows = offline_eval(log, policies, value_metric, options);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].feasible = feasible[i];
  return rows;
}

}  // namespace impatience
