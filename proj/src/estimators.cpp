#include "impatience/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "impatience/error.hpp"
#include "impatience/kernels.hpp"
#include "impatience/summation.hpp"
#include "impatience/weights.hpp"

namespace impatience {

namespace {

std::string_view field_name(UserField f) {
  switch (f) {
    case UserField::user_id: return "user_id";
    case UserField::theta: return "theta";
    case UserField::exposure_at_start: return "exposure_at_start";
    case UserField::cluster: return "cluster";
    case UserField::cost: return "cost";
    case UserField::value_observed: return "value_observed";
    case UserField::value_predicted: return "value_predicted";
    case UserField::n_auctions: return "n_auctions";
    case UserField::n_wins: return "n_wins";
  }
  return "?";
}

void check_alphas(const PreparedLog& log, std::span<const double> alpha) {
  if (alpha.size() != static_cast<std::size_t>(log.n_clusters())) {
    throw ValidationError("multipliers", "expected " + std::to_string(log.n_clusters()) + " cluster multipliers, got " +
                                             std::to_string(alpha.size()));
  }
  for (double a : alpha) {
    if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("bid multiplier must be finite and > 0");
  }
}

void check_cluster(const PreparedLog& log, int cluster) {
  if (cluster < 0 || cluster >= log.n_clusters()) {
    throw ValidationError("cluster", "cluster " + std::to_string(cluster) + " is outside [0, " +
                                         std::to_string(log.n_clusters()) + ")");
  }
}

std::vector<double> masked(std::span<const double> m, std::span<const double> mask) {
  std::vector<double> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] * mask[i];
  return out;
}

// sqrt(n * var(term)): standard error of a total of n i.i.d. user terms.
double total_se(std::span<const double> terms) {
  if (terms.size() < 2) return 0.0;
  return std::sqrt(static_cast<double>(terms.size()) * mean_var(terms).variance);
}

}  // namespace

UserSubset UserSubset::all() { return UserSubset(); }

UserSubset UserSubset::cluster(int cluster) {
  UserSubset s;
  s.predicate_ = [cluster](const UserRecord& u) { return u.cluster == cluster; };
  return s;
}

UserSubset UserSubset::clusters(std::vector<int> clusters) {
  std::sort(clusters.begin(), clusters.end());
  UserSubset s;
  s.predicate_ = [cs = std::move(clusters)](const UserRecord& u) {
    return std::binary_search(cs.begin(), cs.end(), u.cluster);
  };
  return s;
}

UserSubset UserSubset::where(UserField field, std::function<bool(double)> predicate) {
  if (!is_pre_randomization(field)) {
    throw IndependenceViolation("subset predicate on '" + std::string(field_name(field)) +
                                "' depends on post-randomization data; only exposure_at_start and cluster "
                                "are allowed");
  }
  UserSubset s;
  if (field == UserField::exposure_at_start) {
    s.predicate_ = [p = std::move(predicate)](const UserRecord& u) { return p(u.exposure_at_start); };
  } else {
    s.predicate_ = [p = std::move(predicate)](const UserRecord& u) { return p(u.cluster); };
  }
  return s;
}

UserSubset UserSubset::unsafe(std::function<bool(const UserRecord&)> predicate) {
  UserSubset s;
  s.predicate_ = std::move(predicate);
  s.unsafe_ = true;
  return s;
}

bool UserSubset::contains(const UserRecord& user) const { return !predicate_ || predicate_(user); }

PreparedLog::PreparedLog(const RandomizedLog& log) : log_(&log) {
  log.spec.validate();
  const auto n = log.users.size();
  const int k = log.buckets.count();
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  for (const auto& u : log.users) {
    if (u.cluster < 0 || u.cluster >= k) throw ValidationError("cluster", "cluster index outside the bucket scheme");
  }
  std::stable_sort(order_.begin(), order_.end(),
                   [&](std::size_t a, std::size_t b) { return log.users[a].cluster < log.users[b].cluster; });

  cluster_offsets_.assign(static_cast<std::size_t>(k) + 1, 0);
  for (const auto& u : log.users) ++cluster_offsets_[static_cast<std::size_t>(u.cluster) + 1];
  std::partial_sum(cluster_offsets_.begin(), cluster_offsets_.end(), cluster_offsets_.begin());

  z_.resize(n);
  cost_.resize(n);
  vobs_.resize(n);
  vpred_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& u = log.users[order_[i]];
    z_[i] = linear_weight(u.theta, log.spec);
    cost_[i] = u.cost;
    vobs_[i] = u.value_observed;
    vpred_[i] = u.value_predicted;
  }
}

std::span<const double> PreparedLog::metric(Metric m) const noexcept {
  switch (m) {
    case Metric::cost: return cost_;
    case Metric::value_observed: return vobs_;
    case Metric::value_predicted: return vpred_;
  }
  return {};
}

std::vector<double> PreparedLog::mask(const UserSubset& subset, SubsetCheck check) const {
  if (subset.is_unsafe() && check == SubsetCheck::enforce_independence) {
    throw IndependenceViolation(
        "subset was built from an arbitrary predicate and may depend on post-randomization data; pass "
        "SubsetCheck::allow_unsafe to estimate anyway");
  }
  std::vector<double> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = subset.contains(log_->users[order_[i]]) ? 1.0 : 0.0;
  return out;
}

std::vector<double> ips_terms(const PreparedLog& log, Metric metric, std::span<const double> alpha_by_cluster,
                              std::span<const double> mask) {
  check_alphas(log, alpha_by_cluster);
  if (mask.size() != log.size()) throw ValidationError("mask", "length does not match the log");
  const auto m = log.metric(metric);
  const auto z = log.z();
  std::vector<double> out(log.size());
  for (int c = 0; c < log.n_clusters(); ++c) {
    const auto b = log.cluster_begin(c);
    const auto n = log.cluster_size(c);
    const auto coef = exact_weight_coefficients(log.spec(), alpha_by_cluster[static_cast<std::size_t>(c)]);
    kernels::exp_affine(z.subspan(b, n), coef.slope, coef.offset, std::span<double>(out).subspan(b, n));
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= m[i] * mask[i];
  return out;
}

double ips_estimate(const PreparedLog& log, Metric metric, const UserSubset& subset,
                    std::span<const double> alpha_by_cluster, SubsetCheck check) {
  check_alphas(log, alpha_by_cluster);
  const auto m = masked(log.metric(metric), log.mask(subset, check));
  const auto z = log.z();
  CompensatedSum total;
  for (int c = 0; c < log.n_clusters(); ++c) {
    const auto b = log.cluster_begin(c);
    const auto n = log.cluster_size(c);
    const auto coef = exact_weight_coefficients(log.spec(), alpha_by_cluster[static_cast<std::size_t>(c)]);
    total.add(kernels::exp_affine_dot(std::span<const double>(m).subspan(b, n), z.subspan(b, n), coef.slope,
                                      coef.offset));
  }
  return total.value();
}

double ips_estimate(const PreparedLog& log, Metric metric, const UserSubset& subset, const PolicySpec& policy,
                    SubsetCheck check) {
  return ips_estimate(log, metric, subset, policy.dense(log.n_clusters()), check);
}

double ips_estimate(const RandomizedLog& log, Metric metric, const UserSubset& subset, const PolicySpec& policy,
                    SubsetCheck check) {
  return ips_estimate(PreparedLog(log), metric, subset, policy, check);
}

EstimateWithSe ips_estimate_with_se(const PreparedLog& log, Metric metric, const UserSubset& subset,
                                    std::span<const double> alpha_by_cluster, SubsetCheck check) {
  const auto terms = ips_terms(log, metric, alpha_by_cluster, log.mask(subset, check));
  return {kernels::sum(terms), total_se(terms)};
}

double marginal_estimate(const PreparedLog& log, Metric metric, int cluster) {
  check_cluster(log, cluster);
  const auto b = log.cluster_begin(cluster);
  const auto n = log.cluster_size(cluster);
  return kernels::dot(log.metric(metric).subspan(b, n), log.z().subspan(b, n));
}

double marginal_estimate(const PreparedLog& log, Metric metric, const UserSubset& subset, SubsetCheck check) {
  const auto m = masked(log.metric(metric), log.mask(subset, check));
  return kernels::dot(m, log.z());
}

double marginal_estimate(const RandomizedLog& log, Metric metric, int cluster) {
  return marginal_estimate(PreparedLog(log), metric, cluster);
}

EstimateWithSe marginal_estimate_with_se(const PreparedLog& log, Metric metric, const UserSubset& subset,
                                         SubsetCheck check) {
  auto terms = masked(log.metric(metric), log.mask(subset, check));
  const auto z = log.z();
  for (std::size_t i = 0; i < terms.size(); ++i) terms[i] *= z[i];
  return {kernels::sum(terms), total_se(terms)};
}

MarginalRoi marginal_roi(const PreparedLog& log, int cluster, Metric value_metric, std::optional<double> threshold) {
  check_cluster(log, cluster);
  if (value_metric == Metric::cost) throw ValidationError("value_metric", "must be a value metric, not cost");
  MarginalRoi r;
  r.numerator = marginal_estimate(log, value_metric, cluster);
  r.denominator = marginal_estimate(log, Metric::cost, cluster);
  if (threshold) {
    if (!(*threshold >= 0.0)) throw ValidationError("threshold", "must be >= 0");
    r.threshold = *threshold;
  } else {
    const auto b = log.cluster_begin(cluster);
    r.threshold = 1e-9 * kernels::sum(log.metric(Metric::cost).subspan(b, log.cluster_size(cluster)));
  }
  if (std::abs(r.denominator) > r.threshold) r.ratio = r.numerator / r.denominator;
  return r;
}

MarginalRoi marginal_roi(const RandomizedLog& log, int cluster, Metric value_metric,
                         std::optional<double> threshold) {
  return marginal_roi(PreparedLog(log), cluster, value_metric, threshold);
}

ClusterEstimates cluster_estimates(const PreparedLog& log, Metric value_metric, const BootstrapOptions& options) {
  if (value_metric == Metric::cost) throw ValidationError("value_metric", "must be a value metric, not cost");
  const auto n = log.size();
  const int k = log.n_clusters();
  const auto z = log.z();
  const auto cost = log.metric(Metric::cost);
  const auto value = log.metric(value_metric);
  std::vector<double> cz(n), vz(n);
  for (std::size_t i = 0; i < n; ++i) {
    cz[i] = cost[i] * z[i];
    vz[i] = value[i] * z[i];
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();

  // Per cluster: dcost, dvalue, mroi (NaN when undefined).
  const WeightedStatistics stat = [&](std::span<const double> w) {
    std::vector<double> out(3 * static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
      const auto b = log.cluster_begin(c);
      const auto len = log.cluster_size(c);
      const auto wc = w.subspan(b, len);
      const double dc = kernels::dot(wc, std::span<const double>(cz).subspan(b, len));
      const double dv = kernels::dot(wc, std::span<const double>(vz).subspan(b, len));
      const double thr = 1e-9 * kernels::dot(wc, cost.subspan(b, len));
      const auto j = 3 * static_cast<std::size_t>(c);
      out[j] = dc;
      out[j + 1] = dv;
      out[j + 2] = std::abs(dc) > thr ? dv / dc : nan;
    }
    return out;
  };
  const auto ci = bootstrap_ci(n, stat, options);

  ClusterEstimates out(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    auto& e = out[static_cast<std::size_t>(c)];
    const auto j = 3 * static_cast<std::size_t>(c);
    e.cluster = c;
    e.n_users = log.cluster_size(c);
    e.dcost = ci[j].point;
    e.dvalue = ci[j + 1].point;
    if (std::isfinite(ci[j + 2].point)) e.mroi = ci[j + 2].point;
    e.dcost_ci = ci[j];
    e.dvalue_ci = ci[j + 1];
    e.mroi_ci = ci[j + 2];
  }
  return out;
}

ClusterEstimates cluster_point_estimates(const PreparedLog& log, Metric value_metric) {
  ClusterEstimates out;
  for (int c = 0; c < log.n_clusters(); ++c) {
    const auto roi = marginal_roi(log, c, value_metric);
    ClusterEstimate e;
    e.cluster = c;
    e.n_users = log.cluster_size(c);
    e.dcost = roi.denominator;
    e.dvalue = roi.numerator;
    e.mroi = roi.ratio;
    e.dcost_ci = {e.dcost, e.dcost, e.dcost};
    e.dvalue_ci = {e.dvalue, e.dvalue, e.dvalue};
    const double m = roi.ratio.value_or(std::numeric_limits<double>::quiet_NaN());
    e.mroi_ci = {m, m, m};
    out.push_back(e);
  }
  return out;
}

PolicyOutcome ips_policy_outcome(const PreparedLog& log, std::span<const double> alpha_by_cluster,
                                 OutcomeSource source) {
  if (source == OutcomeSource::oracle) throw ValidationError("source", "an IPS outcome cannot be an oracle");
  check_alphas(log, alpha_by_cluster);
  const int k = log.n_clusters();
  const std::vector<double> ones(log.size(), 1.0);
  const auto z = log.z();

  auto terms_for = [&](Metric m) {
    if (source == OutcomeSource::ips_exact) return ips_terms(log, m, alpha_by_cluster, ones);
    const auto v = log.metric(m);
    std::vector<double> t(log.size());
    for (int c = 0; c < k; ++c) {
      const double d = alpha_by_cluster[static_cast<std::size_t>(c)] - 1.0;
      for (auto i = log.cluster_begin(c); i < log.cluster_end(c); ++i) t[i] = v[i] * (1.0 + d * z[i]);
    }
    return t;
  };
  const auto tc = terms_for(Metric::cost);
  const auto to = terms_for(Metric::value_observed);
  const auto tp = terms_for(Metric::value_predicted);

  auto totals = [&](std::size_t b, std::size_t n) {
    OutcomeTotals t;
    const auto sc = std::span<const double>(tc).subspan(b, n);
    const auto so = std::span<const double>(to).subspan(b, n);
    const auto sp = std::span<const double>(tp).subspan(b, n);
    t.cost = kernels::sum(sc);
    t.value_observed = kernels::sum(so);
    t.value_predicted = kernels::sum(sp);
    t.cost_se = total_se(sc);
    t.value_observed_se = total_se(so);
    t.value_predicted_se = total_se(sp);
    t.n_users = n;
    return t;
  };

  PolicyOutcome out;
  out.source = source;
  out.total = totals(0, log.size());
  for (int c = 0; c < k; ++c) out.by_start_cluster.push_back(totals(log.cluster_begin(c), log.cluster_size(c)));
  out.n_reps = 1;
  out.users_per_rep = log.size();
  return out;
}

}  // namespace impatience
