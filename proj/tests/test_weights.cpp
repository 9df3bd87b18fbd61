#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "impatience/error.hpp"
#include "impatience/rng.hpp"
#include "impatience/weight_profile.hpp"
#include "impatience/weights.hpp"
#include "oracles.hpp"

using namespace impatience;

TEST_CASE("exact weight closed-form values") {
  const RandomizationSpec unit{0.0, 1.0};
  CHECK(exact_weight(std::numbers::e, unit, 2.0) == doctest::Approx(oracle::kWeightMu0Sigma1Alpha2ThetaE).epsilon(1e-15));

  const RandomizationSpec shifted{0.7, 1.0};
  CHECK(exact_weight(std::exp(0.7), shifted, std::numbers::e) == doctest::Approx(oracle::kExpMinusHalf).epsilon(1e-15));

  Xoshiro256 rng(5);
  const RandomizationSpec spec{0.0, 0.3};
  for (int i = 0; i < 100; ++i) {
    const double theta = std::exp(0.3 * standard_normal(rng));
    CHECK(exact_weight(theta, spec, 1.0) == 1.0);
  }
}

TEST_CASE("weights reject non-positive arguments") {
  const RandomizationSpec spec;
  CHECK_THROWS_AS(exact_weight(0.0, spec, 1.1), DomainError);
  CHECK_THROWS_AS(exact_weight(-1.0, spec, 1.1), DomainError);
  CHECK_THROWS_AS(exact_weight(1.0, spec, 0.0), DomainError);
  CHECK_THROWS_AS(exact_weight(1.0, spec, -2.0), DomainError);
  CHECK_THROWS_AS(linear_weight(0.0, spec), DomainError);
}

TEST_CASE("linear weight values") {
  CHECK(linear_weight(std::exp(0.4), RandomizationSpec{0.4, 0.3}) == 0.0);
  CHECK(linear_weight(std::numbers::e, RandomizationSpec{0.0, 1.0}) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("linear weight is the derivative of the exact weight at alpha = 1") {
  const RandomizationSpec spec{0.0, 0.3};
  const double h = 1e-6;
  Xoshiro256 rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const double theta = std::exp(0.3 * standard_normal(rng));
    const double fd = (exact_weight(theta, spec, 1.0 + h) - exact_weight(theta, spec, 1.0 - h)) / (2.0 * h);
    const double lw = linear_weight(theta, spec);
    // 1e-9 absolute floor covers the cancellation error of the difference
    // itself (about eps / h) when lw is near 0.
    CHECK(std::fabs(fd - lw) <= 1e-4 * std::fabs(lw) + 1e-9);
  }
}

TEST_CASE("exp-affine coefficients reproduce the exact weight") {
  const RandomizationSpec spec{0.1, 0.25};
  for (double alpha : {0.5, 0.9, 1.0, 1.3, 2.0}) {
    const auto c = exact_weight_coefficients(spec, alpha);
    for (double theta : {0.3, 0.9, 1.0, 1.7, 4.0}) {
      CHECK(std::exp(c.slope * linear_weight(theta, spec) + c.offset) ==
            doctest::Approx(exact_weight(theta, spec, alpha)).epsilon(1e-14));
    }
  }
}

TEST_CASE("analytic weight std matches high-precision values") {
  const RandomizationSpec spec{0.0, 0.3};
  CHECK(analytic_exact_weight_std(spec, 1.0) == 0.0);
  CHECK(analytic_exact_weight_std(spec, 0.5) == doctest::Approx(oracle::kStdSigma03Alpha05).epsilon(1e-13));
  CHECK(analytic_exact_weight_std(spec, 0.8) == doctest::Approx(oracle::kStdSigma03Alpha08).epsilon(1e-13));
  CHECK(analytic_exact_weight_std(spec, 0.9) == doctest::Approx(oracle::kStdSigma03Alpha09).epsilon(1e-13));
  CHECK(analytic_exact_weight_std(spec, 1.1) == doctest::Approx(oracle::kStdSigma03Alpha11).epsilon(1e-13));
  CHECK(analytic_exact_weight_std(spec, 1.2) == doctest::Approx(oracle::kStdSigma03Alpha12).epsilon(1e-13));
  CHECK(analytic_exact_weight_std(spec, 1.5) == doctest::Approx(oracle::kStdSigma03Alpha15).epsilon(1e-13));
  CHECK(analytic_exact_weight_std(spec, 2.0) == doctest::Approx(oracle::kStdSigma03Alpha20).epsilon(1e-13));
}

TEST_CASE("weight profile") {
  const RandomizationSpec spec{0.0, 0.3};
  const std::size_t n = 100000;
  const auto rows = weight_std_profile(spec, {0.8, 0.9, 1.0, 1.1, 1.2}, n, 9);
  REQUIRE(rows.size() == 5);

  SUBCASE("alpha = 1 has a constant weight") {
    CHECK(rows[2].std_exact == 0.0);
    CHECK(rows[2].std_linear == 0.0);
    CHECK(rows[2].mean_exact == 1.0);
  }
  SUBCASE("empirical std within Monte-Carlo error of the closed form") {
    for (const auto& r : rows) {
      CAPTURE(r.alpha);
      const double v = std::pow(std::log(r.alpha) / spec.sigma, 2);
      const double se = oracle::lognormal_weight_std_se(v, n);
      CHECK(std::fabs(r.std_exact - r.std_exact_analytic) <= 3.0 * se + 1e-15);
      CHECK(std::fabs(r.mean_exact - 1.0) <= 3.0 * r.se_mean + 1e-15);
      CHECK(r.n_samples == n);
    }
  }
  SUBCASE("linear counterpart at 1.2 is 0.2 / sigma") {
    // sd of a sample sd of normals: sd / sqrt(2 (n - 1)).
    const double target = 0.2 / 0.3;
    CHECK(std::fabs(rows[4].std_linear - target) <= 3.0 * target / std::sqrt(2.0 * (n - 1)));
  }
  SUBCASE("linear profile is exactly linear in |alpha - 1|") {
    const double unit = rows[0].std_linear / 0.2;
    for (const auto& r : rows) {
      CHECK(r.std_linear == doctest::Approx(unit * std::fabs(r.alpha - 1.0)).epsilon(1e-12));
    }
  }
  SUBCASE("same seed, same profile") {
    const auto again = weight_std_profile(spec, {0.8, 0.9, 1.0, 1.1, 1.2}, n, 9);
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(again[i].std_exact == rows[i].std_exact);
  }
}

TEST_CASE("mean linear weight vanishes and mean exact weight is one") {
  const RandomizationSpec spec{0.2, 0.3};
  Xoshiro256 rng(77);
  const std::size_t n = 100000;
  double s = 0.0, ss = 0.0;
  std::vector<double> sums(4, 0.0), sq(4, 0.0);
  const double alphas[] = {0.8, 0.9, 1.1, 1.2};
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = std::exp(spec.mu + spec.sigma * standard_normal(rng));
    const double z = linear_weight(theta, spec);
    s += z;
    ss += z * z;
    for (int a = 0; a < 4; ++a) {
      const double w = exact_weight(theta, spec, alphas[a]);
      sums[a] += w;
      sq[a] += w * w;
    }
  }
  const double dn = static_cast<double>(n);
  const double mz = s / dn;
  CHECK(std::fabs(mz) <= 3.0 * std::sqrt((ss / dn - mz * mz) / dn));
  for (int a = 0; a < 4; ++a) {
    const double m = sums[a] / dn;
    CHECK(std::fabs(m - 1.0) <= 3.0 * std::sqrt((sq[a] / dn - m * m) / dn));
  }
}
