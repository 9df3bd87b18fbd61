#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "impatience/predictor.hpp"
#include "impatience/rng.hpp"
#include "oracles.hpp"

using namespace impatience;

namespace {

std::vector<DisplayEvent> random_events(std::size_t n, std::size_t d, std::uint64_t seed) {
  Xoshiro256 rng(seed);
  std::vector<DisplayEvent> ev(n);
  for (auto& e : ev) {
    e.features.resize(d);
    double s = -1.0;
    for (auto& x : e.features) {
      x = standard_normal(rng);
      s += 0.5 * x;
    }
    e.fatigue_value = static_cast<double>(rng() % 8);
    s -= 0.3 * e.fatigue_value;
    e.converted = rng.uniform() < 1.0 / (1.0 + std::exp(-s));
  }
  return ev;
}

}  // namespace

TEST_CASE("fatigue encoding") {
  FatigueEncoding enc;
  CHECK(enc.count() == 6);
  CHECK(enc.bucket_of(0.0) == 0);
  CHECK(enc.bucket_of(4.5) == 4);
  CHECK(enc.bucket_of(99.0) == 5);
  CHECK_THROWS_AS(enc.bucket_of(-1.0), ValidationError);
  CHECK_THROWS_AS(FatigueEncoding({2.0, 1.0}), ValidationError);
}

TEST_CASE("intercept-only model predicts the empirical rate") {
  std::vector<DisplayEvent> ev(1000);
  for (std::size_t i = 0; i < ev.size(); ++i) ev[i].converted = i % 8 == 0;
  const auto fit = fit_ctr(ev, FitOptions{});
  for (const auto& e : ev) CHECK(fit.model.predict(e) == doctest::Approx(0.125).epsilon(1e-8));
}

TEST_CASE("one class only is rejected") {
  std::vector<DisplayEvent> ev(10);
  CHECK_THROWS_AS(fit_ctr(ev, FitOptions{}), ValidationError);
}

TEST_CASE("separable data does not converge and the weight keeps growing") {
  std::vector<DisplayEvent> ev;
  for (int i = -20; i <= 20; ++i) {
    if (i == 0) continue;
    DisplayEvent e;
    e.features = {static_cast<double>(i)};
    e.converted = i > 0;
    ev.push_back(e);
  }
  double prev = 0.0;
  for (int iters : {20, 80, 320}) {
    FitOptions o;
    o.max_iters = iters;
    // The gradient of a separable fit decays like exp(-|w|); a tolerance this
    // small leaves the iteration cap as the only stopping rule.
    o.tol = 1e-300;
    try {
      fit_ctr(ev, o);
      FAIL("expected NonConvergence");
    } catch (const NonConvergence& nc) {
      const auto& m = nc.last().model;
      CHECK(m.weights[1] > prev);
      prev = m.weights[1];
      std::size_t right = 0;
      for (const auto& e : ev) right += (m.predict(e) > 0.5) == e.converted;
      CHECK(right == ev.size());
      CHECK(nc.grad_norm() > 0.0);
    }
  }
}

TEST_CASE("analytic gradient matches finite differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto ev = random_events(60, 3, seed);
    CtrModel m;
    m.n_features = 3;
    m.includes_fatigue = seed % 2 == 0;
    Xoshiro256 rng(seed + 100);
    m.weights.resize(1 + 3 + (m.includes_fatigue ? 5 : 0));
    for (auto& w : m.weights) w = 0.5 * standard_normal(rng);
    const double l2 = 0.1 * static_cast<double>(seed);
    std::vector<double> g;
    ctr_objective(ev, m, l2, &g);
    const auto fd = oracle::central_gradient(
        [&](const std::vector<double>& w) {
          CtrModel mm = m;
          mm.weights = w;
          return ctr_objective(ev, mm, l2);
        },
        m.weights, 1e-5);
    for (std::size_t j = 0; j < g.size(); ++j) {
      CHECK(std::fabs(g[j] - fd[j]) <= 1e-6 * std::max(1.0, std::fabs(g[j])));
    }
  }
}

TEST_CASE("fit properties") {
  const auto ev = random_events(4000, 2, 55);
  FitOptions plain;
  const auto a = fit_ctr(ev, plain);
  FitOptions fat;
  fat.include_fatigue = true;
  const auto b = fit_ctr(ev, fat);

  for (const auto* r : {&a, &b}) {
    for (std::size_t i = 1; i < r->objective_history.size(); ++i) {
      CHECK(r->objective_history[i] >= r->objective_history[i - 1]);
    }
    CHECK(r->grad_norm < plain.tol);
    for (const auto& e : ev) {
      const double p = r->model.predict(e);
      CHECK(p > 0.0);
      CHECK(p < 1.0);
    }
  }
  CHECK(b.log_likelihood >= a.log_likelihood);
  CHECK(b.model.weights.size() == 1 + 2 + 5);

  FitOptions ridge;
  ridge.l2 = 1.0;
  const auto c = fit_ctr(ev, ridge);
  double na = 0.0, nc = 0.0;
  for (std::size_t j = 1; j < 3; ++j) {
    na += a.model.weights[j] * a.model.weights[j];
    nc += c.model.weights[j] * c.model.weights[j];
  }
  CHECK(nc < na);
}

TEST_CASE("calibration of a constant model on homogeneous data") {
  Xoshiro256 rng(3);
  std::vector<DisplayEvent> ev(30000);
  for (auto& e : ev) {
    e.fatigue_value = static_cast<double>(rng() % 7);
    e.converted = rng.uniform() < 0.1;
  }
  CtrModel m;
  m.weights = {std::log(0.1 / 0.9)};
  const auto rows = calibration_curve(m, ev, FatigueEncoding{});
  REQUIRE(rows.size() == 6);
  std::size_t total = 0;
  for (const auto& r : rows) {
    CHECK(r.mean_predicted == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(r.binomial_se == doctest::Approx(std::sqrt(0.09 / static_cast<double>(r.n))).epsilon(1e-12));
    CHECK(std::fabs(r.empirical_rate - r.mean_predicted) <= 3.0 * r.binomial_se);
    total += r.n;
  }
  CHECK(total == ev.size());

  const auto empty = calibration_curve(m, {}, FatigueEncoding{});
  CHECK(std::isnan(empty[0].empirical_rate));
}

TEST_CASE("events from a display trace") {
  std::vector<DisplayRecord> trace{{0, 3, 0.02, true, 1.0, 2.0}, {1, 0, 0.05, false, 1.0, 2.0}};
  const auto ev = events_from_trace(trace);
  REQUIRE(ev.size() == 2);
  CHECK(ev[0].fatigue_value == 3.0);
  CHECK(ev[0].converted);
  CHECK(ev[0].features.empty());
}

TEST_CASE("event CSV reader") {
  const std::string path = "predictor_events_test.tsv";
  {
    std::ofstream out(path);
    out << "0.5\t2\t1\n-1.0\t0\t0\n";
  }
  ColumnMapping map;
  map.features = {"0"};
  map.fatigue = "1";
  map.label = "2";
  const auto ev = read_events_csv(path, map, '\t', false);
  REQUIRE(ev.size() == 2);
  CHECK(ev[0].features == std::vector<double>{0.5});
  CHECK(ev[0].fatigue_value == 2.0);
  CHECK(ev[0].converted);
  CHECK_FALSE(ev[1].converted);
  {
    std::ofstream out(path);
    out << "x,exposure,converted\n1,0,2\n";
  }
  ColumnMapping bad;
  bad.features = {"x"};
  CHECK_THROWS(read_events_csv(path, bad));
  std::remove(path.c_str());
}
