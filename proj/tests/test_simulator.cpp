#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "impatience/error.hpp"
#include "impatience/log_io.hpp"
#include "impatience/simulator.hpp"
#include "impatience/summation.hpp"
#include "impatience/two_auction.hpp"
#include "oracles.hpp"

using namespace impatience;

namespace {

SimConfig small_config(std::size_t n) {
  SimConfig c;
  c.n_users = n;
  return c;
}

std::string log_bytes(const RandomizedLog& log) {
  std::ostringstream ss;
  write_log(log, ss);
  return ss.str();
}

}  // namespace

TEST_CASE("price distributions") {
  const auto ln = PriceDistribution::lognormal(1.4, 1.25);
  CHECK(ln.cdf_below(5.0) == doctest::Approx(oracle::kLognormalCdf5).epsilon(1e-14));
  CHECK(ln.partial_expectation_below(5.0) == doctest::Approx(oracle::kLognormalPartialBelow5).epsilon(1e-14));
  CHECK(ln.cdf_below(0.0) == 0.0);

  const auto u = PriceDistribution::uniform(0, 100);
  CHECK(u.cdf_below(25) == 0.25);
  CHECK(u.partial_expectation_below(100) == 50.0);
  CHECK(PriceDistribution::parse("uniform:0:100") == u);
  CHECK(PriceDistribution::parse(ln.to_string()) == ln);
  CHECK(PriceDistribution::parse("constant:3").cdf_below(3.0) == 0.0);
  CHECK_THROWS_AS(PriceDistribution::parse("gamma:1:2"), ValidationError);
  CHECK_THROWS_AS(PriceDistribution::lognormal(0, 0), ValidationError);
  CHECK_THROWS_AS(PriceDistribution::uniform(3, 1), ValidationError);
}

TEST_CASE("config validation") {
  SimConfig c;
  c.validate();
  c.fatigue_decay = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = SimConfig{};
  c.base_conversion_prob = 1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = SimConfig{};
  c.initial_exposure = {0.0, 0.0};
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = SimConfig{};
  for (int k = 0; k < 30; ++k) CHECK(c.conversion_prob(k + 1) <= c.conversion_prob(k));
}

TEST_CASE("simulate_log is deterministic and thread-count independent") {
  const auto cfg = small_config(20000);
  const RandomizationSpec spec;
  const auto a = simulate_log(cfg, spec, 42, 1);
  const auto b = simulate_log(cfg, spec, 42, 4);
  CHECK(log_bytes(a) == log_bytes(b));
  const auto c = simulate_log(cfg, spec, 43, 1);
  CHECK(log_bytes(a) != log_bytes(c));
  a.validate();
}

TEST_CASE("unwinnable competition gives empty users") {
  auto cfg = small_config(2000);
  cfg.competition = PriceDistribution::constant(1e9);
  const auto log = simulate_log(cfg, RandomizationSpec{}, 1);
  for (const auto& u : log.users) {
    CHECK(u.n_wins == 0);
    CHECK(u.cost == 0.0);
    CHECK(u.value_observed == 0.0);
    CHECK(u.value_predicted == 0.0);
  }
}

TEST_CASE("one auction, no fatigue, certain win") {
  auto cfg = small_config(5000);
  cfg.fatigue_decay = 1.0;
  cfg.auctions_per_user = {AuctionCountSpec::Kind::fixed, 1.0};
  cfg.competition = PriceDistribution::constant(0.5);
  // Bids are 100 * 0.05 * theta = 5 theta; sigma 0.1 keeps theta far above 0.1.
  const auto log = simulate_log(cfg, RandomizationSpec{0.0, 0.1}, 8);
  double vobs = 0.0;
  for (const auto& u : log.users) {
    CHECK(u.n_wins == 1);
    CHECK(u.cost == 0.5);
    CHECK(u.value_predicted == doctest::Approx(5.0).epsilon(1e-15));
    vobs += u.value_observed;
  }
  const double p = 0.05;
  const double n = static_cast<double>(log.users.size());
  CHECK(std::fabs(vobs / n - 5.0) <= 3.0 * 100.0 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("observed value tracks predicted value") {
  const auto log = simulate_log(small_config(100000), RandomizationSpec{}, 17);
  std::vector<double> diff;
  diff.reserve(log.users.size());
  for (const auto& u : log.users) diff.push_back(u.value_observed - u.value_predicted);
  const auto mv = mean_var(diff);
  CHECK(std::fabs(mv.mean) <= 3.0 * std::sqrt(mv.variance / static_cast<double>(diff.size())));

  std::vector<double> lt;
  for (const auto& u : log.users) lt.push_back(std::log(u.theta));
  const auto m = mean_var(lt);
  CHECK(std::fabs(m.mean - 0.0) <= 3.0 * std::sqrt(m.variance / static_cast<double>(lt.size())));
}

TEST_CASE("trace invariants") {
  const auto cfg = small_config(3000);
  const RandomizationSpec spec;
  const auto log = simulate_log(cfg, spec, 5);
  const auto trace = simulate_display_trace(cfg, spec, 5);

  std::map<std::uint64_t, std::vector<DisplayRecord>> by_user;
  for (const auto& r : trace) by_user[r.user_index].push_back(r);
  std::size_t wins = 0;
  for (std::size_t i = 0; i < log.users.size(); ++i) {
    const auto& u = log.users[i];
    const auto& rs = by_user[i];
    REQUIRE(rs.size() == static_cast<std::size_t>(u.n_wins));
    wins += rs.size();
    CompensatedSum vpred, cost;
    for (std::size_t j = 0; j < rs.size(); ++j) {
      CHECK(rs[j].exposure == u.exposure_at_start + static_cast<int>(j));
      CHECK(rs[j].conversion_prob == cfg.conversion_prob(rs[j].exposure));
      if (j) CHECK(rs[j].conversion_prob <= rs[j - 1].conversion_prob);
      CHECK(rs[j].price < rs[j].bid);
      vpred.add(cfg.value_per_conversion * rs[j].conversion_prob);
      cost.add(rs[j].price);
    }
    CHECK(u.value_predicted == vpred.value());
    CHECK(u.cost == cost.value());
  }
  CHECK(wins == trace.size());
}

TEST_CASE("raising the multiplier never reduces wins or cost") {
  const auto cfg = small_config(1);
  const RandomizationSpec spec;
  for (std::uint64_t user = 0; user < 3000; ++user) {
    const auto lo = simulate_user(cfg, BidPolicy::global(spec, 1.0, 6), 99, user);
    const auto hi = simulate_user(cfg, BidPolicy::global(spec, 1.3, 6), 99, user);
    CHECK(hi.n_wins >= lo.n_wins);
    CHECK(hi.cost >= lo.cost);
  }
}

TEST_CASE("oracle outcomes") {
  const auto cfg = small_config(20000);
  const RandomizationSpec spec;

  SUBCASE("all-ones policy reproduces the randomized bidder") {
    const auto base = oracle_policy_outcome(cfg, BidPolicy::randomized(spec), 2, 3);
    const auto ones = oracle_policy_outcome(cfg, BidPolicy::global(spec, 1.0, cfg.buckets.count()), 2, 3);
    CHECK(base.total.cost == ones.total.cost);
    CHECK(base.total.value_predicted == ones.total.value_predicted);
    CHECK(base.n_reps == 2);
    CHECK(base.source == OutcomeSource::oracle);
    CHECK(base.total.cost_se > 0.0);
  }
  SUBCASE("zero multipliers never win") {
    const auto zero = oracle_policy_outcome(cfg, BidPolicy::global(spec, 0.0, cfg.buckets.count()), 1, 3);
    CHECK(zero.total.cost == 0.0);
    CHECK(zero.total.value_predicted == 0.0);
  }
  SUBCASE("higher bids cost more without fatigue") {
    auto flat = cfg;
    flat.fatigue_decay = 1.0;
    const auto base = oracle_policy_outcome(flat, BidPolicy::randomized(spec), 2, 4);
    const auto up = oracle_policy_outcome(flat, BidPolicy::global(spec, 1.1, flat.buckets.count()), 2, 4);
    CHECK(up.total.cost > base.total.cost);
  }
  SUBCASE("per-cluster totals add up") {
    const auto o = oracle_policy_outcome(cfg, BidPolicy::randomized(spec), 1, 6);
    double s = 0.0, e = 0.0;
    std::size_t n = 0;
    for (const auto& t : o.by_start_cluster) {
      s += t.cost;
      n += t.n_users;
    }
    for (const auto& t : o.by_end_bucket) e += t.cost;
    CHECK(s == doctest::Approx(o.total.cost).epsilon(1e-12));
    CHECK(e == doctest::Approx(o.total.cost).epsilon(1e-12));
    CHECK(n == cfg.n_users);
  }
  SUBCASE("invalid replication count") {
    CHECK_THROWS_AS(oracle_policy_outcome(cfg, BidPolicy::randomized(spec), 0, 1), ValidationError);
  }
}

TEST_CASE("a/b comparison of identical arms") {
  const auto cfg = small_config(1);
  const RandomizationSpec spec;
  const auto base = BidPolicy::randomized(spec);
  const auto same = BidPolicy::global(spec, 1.0, cfg.buckets.count());
  const auto indep = ab_compare(cfg, base, same, 50000, 1, false);
  CHECK(std::fabs(indep.rel_dvalue) <= 3.0 * indep.rel_dvalue_se);
  CHECK(std::fabs(indep.rel_dcost) <= 3.0 * indep.rel_dcost_se);
  const auto crn = ab_compare(cfg, base, same, 50000, 1, true);
  CHECK(crn.rel_dvalue == 0.0);
  CHECK(crn.rel_dcost == 0.0);
}

TEST_CASE("two sequential auctions") {
  const auto u = PriceDistribution::uniform(0, 100);

  SUBCASE("uniform competition shades the first bid to 50") {
    const auto r = two_auction_demo(100.0, u, 0.01);
    CHECK(r.best_first_bid == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(r.best_profit == doctest::Approx(62.5).epsilon(1e-12));
    CHECK(r.continuation_value == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(r.best_first_bid < 100.0);
  }
  SUBCASE("unwinnable second auction gives the truthful bid") {
    const auto r = two_auction_demo(100.0, u, PriceDistribution::constant(1000.0), 0.01);
    CHECK(r.best_first_bid == 100.0);
    CHECK(r.continuation_value == 0.0);
  }
  SUBCASE("closed form agrees with Monte Carlo at every grid point") {
    const auto ln = PriceDistribution::lognormal(3.5, 0.6);
    const auto r = two_auction_demo(100.0, ln, u, 2.0);
    double best = -1.0, arg = 0.0;
    for (std::size_t j = 0; j < r.curve.size(); ++j) {
      const auto& p = r.curve[j];
      const auto mc = oracle::two_auction_profit_mc(100.0, ln, u, p.bid, 40000, 1000 + j);
      CHECK(std::fabs(mc.mean - p.expected_profit) <= 3.0 * mc.se + 1e-12);
      if (p.expected_profit >= best) {
        best = p.expected_profit;
        arg = p.bid;
      }
    }
    CHECK(r.best_first_bid == arg);
    CHECK(r.best_first_bid < 100.0);
  }
  SUBCASE("invalid step") { CHECK_THROWS_AS(two_auction_demo(100.0, u, 0.0), ValidationError); }
}
