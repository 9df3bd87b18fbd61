#include "impatience/simulator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <random>

#include "impatience/error.hpp"
#include "impatience/parallel.hpp"
#include "impatience/summation.hpp"

namespace impatience {
namespace {

constexpr std::uint64_t kUserStream = 1;
constexpr std::uint64_t kAuctionStream = 2;

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double parse_number(std::string_view text, std::string_view whole) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ValidationError("distribution", "cannot parse '" + std::string(whole) + "'");
  }
  return v;
}

std::string format_number(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// Poisson means per prior exposure, normalised to the population mean.
std::vector<double> auction_means(const SimConfig& c) {
  const std::size_t k_max = c.initial_exposure.size();
  double total = 0.0, weighted = 0.0;
  for (std::size_t k = 0; k < k_max; ++k) {
    total += c.initial_exposure[k];
    weighted += c.initial_exposure[k] * std::pow(c.activity_ratio, static_cast<double>(k));
  }
  std::vector<double> means(k_max);
  for (std::size_t k = 0; k < k_max; ++k) {
    means[k] = c.auctions_per_user.mean * std::pow(c.activity_ratio, static_cast<double>(k)) * total / weighted;
  }
  return means;
}

int draw_exposure(const SimConfig& c, Xoshiro256& rng) {
  double total = 0.0;
  for (double w : c.initial_exposure) total += w;
  const double u = rng.uniform() * total;
  double acc = 0.0;
  for (std::size_t k = 0; k < c.initial_exposure.size(); ++k) {
    acc += c.initial_exposure[k];
    if (u < acc) return static_cast<int>(k);
  }
  return static_cast<int>(c.initial_exposure.size()) - 1;
}

// Per-group sums for pooled standard errors.
struct Moments {
  CompensatedSum s1, s2;
  void add(double x) noexcept {
    s1.add(x);
    s2.add(x * x);
  }
};

struct GroupMoments {
  Moments cost, vobs, vpred;
  void add(const UserPath& p) noexcept {
    cost.add(p.cost);
    vobs.add(p.value_observed);
    vpred.add(p.value_predicted);
  }
  void add_zero() noexcept {
    cost.add(0.0);
    vobs.add(0.0);
    vpred.add(0.0);
  }
};

// Totals over populations of n users observed n_reps times: mean total is
// S1 / reps, and the total's variance is n * var(per-user contribution).
OutcomeTotals finish(const GroupMoments& g, std::size_t users_per_rep, int reps, std::size_t members) {
  const double n_all = static_cast<double>(users_per_rep) * reps;
  auto total = [&](const Moments& m) { return m.s1.value() / reps; };
  auto se = [&](const Moments& m) {
    if (n_all < 2) return 0.0;
    const double s1 = m.s1.value();
    const double var = std::max(0.0, (m.s2.value() - s1 * s1 / n_all) / (n_all - 1.0));
    return std::sqrt(static_cast<double>(users_per_rep) * var / reps);
  };
  OutcomeTotals t;
  t.cost = total(g.cost);
  t.value_observed = total(g.vobs);
  t.value_predicted = total(g.vpred);
  t.cost_se = se(g.cost);
  t.value_observed_se = se(g.vobs);
  t.value_predicted_se = se(g.vpred);
  t.n_users = members / static_cast<std::size_t>(reps);
  return t;
}

std::vector<UserPath> simulate_population(const SimConfig& config, const BidPolicy& policy, std::uint64_t pop_seed,
                                          std::size_t n_users, unsigned threads) {
  std::vector<UserPath> paths(n_users);
  parallel_for(n_users, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) paths[i] = simulate_user(config, policy, pop_seed, i);
  });
  return paths;
}

}  // namespace

PriceDistribution PriceDistribution::lognormal(double mu, double sigma) {
  if (!std::isfinite(mu) || !(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ValidationError("competition", "lognormal needs finite mu and sigma > 0");
  }
  return {Kind::lognormal, mu, sigma};
}

PriceDistribution PriceDistribution::uniform(double low, double high) {
  if (!std::isfinite(low) || !std::isfinite(high) || !(low >= 0.0) || !(high > low)) {
    throw ValidationError("competition", "uniform needs 0 <= low < high");
  }
  return {Kind::uniform, low, high};
}

PriceDistribution PriceDistribution::constant(double value) {
  if (!(value >= 0.0) || !std::isfinite(value)) throw ValidationError("competition", "constant must be >= 0");
  return {Kind::constant, value, 0.0};
}

PriceDistribution PriceDistribution::parse(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(':', start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  const auto kind = parts[0];
  if (kind == "lognormal" && parts.size() == 3) {
    return lognormal(parse_number(parts[1], text), parse_number(parts[2], text));
  }
  if (kind == "uniform" && parts.size() == 3) {
    return uniform(parse_number(parts[1], text), parse_number(parts[2], text));
  }
  if (kind == "constant" && parts.size() == 2) return constant(parse_number(parts[1], text));
  throw ValidationError("distribution", "expected lognormal:MU:SIGMA, uniform:LOW:HIGH or constant:VALUE, got '" +
                                            std::string(text) + "'");
}

double PriceDistribution::cdf_below(double x) const noexcept {
  switch (kind_) {
    case Kind::lognormal:
      return x <= 0.0 ? 0.0 : normal_cdf((std::log(x) - a_) / b_);
    case Kind::uniform:
      return std::clamp((x - a_) / (b_ - a_), 0.0, 1.0);
    case Kind::constant:
      return a_ < x ? 1.0 : 0.0;
  }
  return 0.0;
}

double PriceDistribution::partial_expectation_below(double x) const noexcept {
  switch (kind_) {
    case Kind::lognormal:
      if (x <= 0.0) return 0.0;
      return std::exp(a_ + 0.5 * b_ * b_) * normal_cdf((std::log(x) - a_ - b_ * b_) / b_);
    case Kind::uniform: {
      const double m = std::clamp(x, a_, b_);
      return (m * m - a_ * a_) / (2.0 * (b_ - a_));
    }
    case Kind::constant:
      return a_ < x ? a_ : 0.0;
  }
  return 0.0;
}

double PriceDistribution::sample(Xoshiro256& rng) const {
  switch (kind_) {
    case Kind::lognormal:
      return std::exp(a_ + b_ * standard_normal(rng));
    case Kind::uniform:
      return a_ + (b_ - a_) * rng.uniform();
    case Kind::constant:
      return a_;
  }
  return 0.0;
}

std::string PriceDistribution::to_string() const {
  switch (kind_) {
    case Kind::lognormal: return "lognormal:" + format_number(a_) + ":" + format_number(b_);
    case Kind::uniform: return "uniform:" + format_number(a_) + ":" + format_number(b_);
    case Kind::constant: return "constant:" + format_number(a_);
  }
  return {};
}

void SimConfig::validate() const {
  if (n_users == 0) throw ValidationError("n_users", "must be >= 1");
  if (!(auctions_per_user.mean >= 0.0) || !std::isfinite(auctions_per_user.mean)) {
    throw ValidationError("auctions_per_user", "mean must be finite and >= 0");
  }
  if (auctions_per_user.kind == AuctionCountSpec::Kind::fixed &&
      auctions_per_user.mean != std::floor(auctions_per_user.mean)) {
    throw ValidationError("auctions_per_user", "fixed count must be an integer");
  }
  if (!(activity_ratio > 0.0) || !std::isfinite(activity_ratio)) {
    throw ValidationError("activity_ratio", "must be finite and > 0");
  }
  if (!(value_per_conversion > 0.0) || !std::isfinite(value_per_conversion)) {
    throw ValidationError("value_per_conversion", "must be finite and > 0");
  }
  if (!(base_conversion_prob > 0.0 && base_conversion_prob < 1.0)) {
    throw ValidationError("base_conversion_prob", "must lie in (0, 1)");
  }
  if (!(fatigue_decay > 0.0 && fatigue_decay <= 1.0)) throw ValidationError("fatigue_decay", "must lie in (0, 1]");
  if (initial_exposure.empty()) throw ValidationError("initial_exposure", "needs at least one category");
  double total = 0.0;
  for (double w : initial_exposure) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("initial_exposure", "weights must be finite and >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw ValidationError("initial_exposure", "weights must not all be zero");
}

double SimConfig::conversion_prob(int exposure) const noexcept {
  return base_conversion_prob * std::pow(fatigue_decay, exposure);
}

double SimConfig::display_value(int exposure) const noexcept {
  return value_per_conversion * conversion_prob(exposure);
}

double SimConfig::mean_auctions(int exposure_at_start) const noexcept {
  const auto means = auction_means(*this);
  const auto k = std::clamp<std::size_t>(static_cast<std::size_t>(exposure_at_start), 0, means.size() - 1);
  return means[k];
}

BidPolicy BidPolicy::randomized(const RandomizationSpec& spec) {
  BidPolicy p;
  p.spec = spec;
  return p;
}

BidPolicy BidPolicy::with_multipliers(const RandomizationSpec& spec, std::vector<double> by_cluster, bool dynamic) {
  for (double a : by_cluster) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw ValidationError("multipliers", "must be finite and >= 0");
  }
  BidPolicy p;
  p.kind = Kind::cluster_multiplier;
  p.spec = spec;
  p.multipliers = std::move(by_cluster);
  p.dynamic = dynamic;
  return p;
}

BidPolicy BidPolicy::from_policy(const RandomizationSpec& spec, const PolicySpec& policy, int n_clusters,
                                 bool dynamic) {
  return with_multipliers(spec, policy.dense(n_clusters), dynamic);
}

BidPolicy BidPolicy::global(const RandomizationSpec& spec, double alpha, int n_clusters) {
  return with_multipliers(spec, std::vector<double>(static_cast<std::size_t>(n_clusters), alpha));
}

double BidPolicy::multiplier(int cluster) const noexcept {
  if (kind == Kind::impatient_randomized) return 1.0;
  const auto c = static_cast<std::size_t>(cluster);
  return c < multipliers.size() ? multipliers[c] : 1.0;
}

std::uint64_t population_seed(std::uint64_t seed, std::uint64_t rep) noexcept { return derive_seed(seed, rep); }

UserPath simulate_user(const SimConfig& config, const BidPolicy& policy, std::uint64_t pop_seed,
                       std::uint64_t user_index, std::vector<DisplayRecord>* trace) {
  Xoshiro256 user_rng(derive_seed(pop_seed, user_index, kUserStream));
  Xoshiro256 auction_rng(derive_seed(pop_seed, user_index, kAuctionStream));

  UserPath path;
  // Prior exposure is drawn before theta, so the start cluster cannot depend on it.
  path.exposure_at_start = draw_exposure(config, user_rng);
  path.theta = std::exp(policy.spec.mu + policy.spec.sigma * standard_normal(user_rng));

  const double mean = config.auctions_per_user.kind == AuctionCountSpec::Kind::fixed
                          ? config.auctions_per_user.mean
                          : auction_means(config)[static_cast<std::size_t>(path.exposure_at_start)];
  if (config.auctions_per_user.kind == AuctionCountSpec::Kind::fixed) {
    path.n_auctions = static_cast<int>(mean);
  } else {
    path.n_auctions = mean > 0.0 ? std::poisson_distribution<int>(mean)(user_rng) : 0;
  }

  const int start_cluster = config.buckets.bucket_of(path.exposure_at_start);
  const double fixed_alpha = policy.multiplier(start_cluster);
  int k = path.exposure_at_start;
  CompensatedSum cost, vobs, vpred;

  for (int t = 0; t < path.n_auctions; ++t) {
    const double competing = config.competition.sample(auction_rng);
    const double u = auction_rng.uniform();
    const double alpha = policy.dynamic ? policy.multiplier(config.buckets.bucket_of(k)) : fixed_alpha;
    const double bid = config.display_value(k) * path.theta * alpha;
    if (!(bid > competing)) continue;

    const double p = config.conversion_prob(k);
    const bool converted = u < p;
    cost.add(competing);
    vpred.add(config.value_per_conversion * p);
    if (converted) vobs.add(config.value_per_conversion);
    if (trace) trace->push_back({user_index, k, p, converted, competing, bid});
    ++path.n_wins;
    ++k;
  }
  path.exposure_end = k;
  path.cost = cost.value();
  path.value_observed = vobs.value();
  path.value_predicted = vpred.value();
  return path;
}

RandomizedLog simulate_log(const SimConfig& config, const RandomizationSpec& spec, std::uint64_t seed,
                           unsigned threads) {
  config.validate();
  spec.validate();
  const auto pop = population_seed(seed, 0);
  const auto policy = BidPolicy::randomized(spec);
  const auto paths = simulate_population(config, policy, pop, config.n_users, threads);

  RandomizedLog log;
  log.spec = spec;
  log.buckets = config.buckets;
  log.users.resize(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto& p = paths[i];
    auto& u = log.users[i];
    u.user_id = std::to_string(i);
    u.theta = p.theta;
    u.exposure_at_start = p.exposure_at_start;
    u.cluster = config.buckets.bucket_of(p.exposure_at_start);
    u.cost = p.cost;
    u.value_observed = p.value_observed;
    u.value_predicted = p.value_predicted;
    u.n_auctions = p.n_auctions;
    u.n_wins = p.n_wins;
  }
  return log;
}

std::vector<DisplayRecord> simulate_display_trace(const SimConfig& config, const RandomizationSpec& spec,
                                                  std::uint64_t seed, unsigned threads) {
  config.validate();
  spec.validate();
  const auto pop = population_seed(seed, 0);
  const auto policy = BidPolicy::randomized(spec);
  std::vector<std::vector<DisplayRecord>> per_user(config.n_users);
  parallel_for(config.n_users, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) simulate_user(config, policy, pop, i, &per_user[i]);
  });
  std::vector<DisplayRecord> out;
  for (auto& v : per_user) out.insert(out.end(), v.begin(), v.end());
  return out;
}

PolicyOutcome oracle_policy_outcome(const SimConfig& config, const BidPolicy& policy, int n_reps, std::uint64_t seed,
                                    unsigned threads) {
  config.validate();
  policy.spec.validate();
  if (n_reps < 1) throw ValidationError("n_reps", "must be >= 1");

  const int n_clusters = config.buckets.count();
  GroupMoments total;
  std::vector<GroupMoments> by_start(static_cast<std::size_t>(n_clusters));
  std::vector<GroupMoments> by_end(static_cast<std::size_t>(n_clusters));
  std::vector<std::size_t> start_members(static_cast<std::size_t>(n_clusters), 0);
  std::vector<std::size_t> end_members(static_cast<std::size_t>(n_clusters), 0);

  for (int rep = 0; rep < n_reps; ++rep) {
    const auto paths =
        simulate_population(config, policy, population_seed(seed, static_cast<std::uint64_t>(rep)), config.n_users,
                            threads);
    for (const auto& p : paths) {
      total.add(p);
      const int sc = config.buckets.bucket_of(p.exposure_at_start);
      const int ec = config.buckets.bucket_of(p.exposure_end);
      for (int c = 0; c < n_clusters; ++c) {
        const auto cu = static_cast<std::size_t>(c);
        if (c == sc) {
          by_start[cu].add(p);
          ++start_members[cu];
        } else {
          by_start[cu].add_zero();
        }
        if (c == ec) {
          by_end[cu].add(p);
          ++end_members[cu];
        } else {
          by_end[cu].add_zero();
        }
      }
    }
  }

  PolicyOutcome out;
  out.source = OutcomeSource::oracle;
  out.n_reps = n_reps;
  out.users_per_rep = config.n_users;
  out.total = finish(total, config.n_users, n_reps, config.n_users * static_cast<std::size_t>(n_reps));
  for (int c = 0; c < n_clusters; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    out.by_start_cluster.push_back(finish(by_start[cu], config.n_users, n_reps, start_members[cu]));
    out.by_end_bucket.push_back(finish(by_end[cu], config.n_users, n_reps, end_members[cu]));
  }
  return out;
}

ArmComparison ab_compare(const SimConfig& config, const BidPolicy& baseline, const BidPolicy& treated,
                         std::size_t users_per_arm, std::uint64_t seed, bool common_random_numbers,
                         Metric value_metric, unsigned threads) {
  config.validate();
  if (users_per_arm < 2) throw ValidationError("users_per_arm", "must be >= 2");
  const auto seed_a = derive_seed(seed, 0xA);
  const auto seed_b = common_random_numbers ? seed_a : derive_seed(seed, 0xB);
  const auto a = simulate_population(config, baseline, seed_a, users_per_arm, threads);
  const auto b = simulate_population(config, treated, seed_b, users_per_arm, threads);

  auto value_of = [&](const UserPath& p) {
    switch (value_metric) {
      case Metric::cost: return p.cost;
      case Metric::value_observed: return p.value_observed;
      case Metric::value_predicted: return p.value_predicted;
    }
    return 0.0;
  };

  const double n = static_cast<double>(users_per_arm);
  // Ratio of means with a delta-method standard error. Under common random
  // numbers the arms are paired user by user and the covariance term enters.
  auto relative = [&](auto&& get, double& base_mean, double& treat_mean, double& rel, double& se) {
    std::vector<double> xa(users_per_arm), xb(users_per_arm);
    for (std::size_t i = 0; i < users_per_arm; ++i) {
      xa[i] = get(a[i]);
      xb[i] = get(b[i]);
    }
    const auto ma = mean_var(xa);
    const auto mb = mean_var(xb);
    double cov = 0.0;
    if (common_random_numbers) {
      CompensatedSum s;
      for (std::size_t i = 0; i < users_per_arm; ++i) s.add((xa[i] - ma.mean) * (xb[i] - mb.mean));
      cov = s.value() / (n - 1.0);
    }
    base_mean = ma.mean;
    treat_mean = mb.mean;
    rel = mb.mean / ma.mean - 1.0;
    const double r = mb.mean / ma.mean;
    const double var = (mb.variance + r * r * ma.variance - 2.0 * r * cov) / (n * ma.mean * ma.mean);
    se = std::sqrt(std::max(0.0, var));
  };

  ArmComparison out;
  out.users_per_arm = users_per_arm;
  out.common_random_numbers = common_random_numbers;
  out.value_metric = value_metric;
  relative(value_of, out.baseline_value, out.treated_value, out.rel_dvalue, out.rel_dvalue_se);
  relative([](const UserPath& p) { return p.cost; }, out.baseline_cost, out.treated_cost, out.rel_dcost,
           out.rel_dcost_se);
  constexpr double z95 = 1.959963984540054;
  out.rel_dvalue_ci = {out.rel_dvalue, out.rel_dvalue - z95 * out.rel_dvalue_se, out.rel_dvalue + z95 * out.rel_dvalue_se};
  out.rel_dcost_ci = {out.rel_dcost, out.rel_dcost - z95 * out.rel_dcost_se, out.rel_dcost + z95 * out.rel_dcost_se};
  return out;
}

}  // namespace impatience
