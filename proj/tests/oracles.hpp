#pragma once

// Reference computations for the tests. Each one is deliberately naive and
// shares no code path with the library routine it checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "impatience/optimizer.hpp"
#include "impatience/rng.hpp"
#include "impatience/simulator.hpp"

namespace oracle {

// High-precision values (50-digit evaluation of the closed forms).
inline constexpr double kWeightMu0Sigma1Alpha2ThetaE = 1.57289940911881072982;  // exp(ln2 - ln^2 2 / 2)
inline constexpr double kExpMinusHalf = 0.60653065971263342360;
inline constexpr double kStdSigma03Alpha05 = 14.3934863637534007;
inline constexpr double kStdSigma03Alpha08 = 0.859596285507161986;
inline constexpr double kStdSigma03Alpha09 = 0.362314755246344175;
inline constexpr double kStdSigma03Alpha11 = 0.325888425355951847;
inline constexpr double kStdSigma03Alpha12 = 0.668422222607444140;
inline constexpr double kStdSigma03Alpha15 = 2.28326006378636939;
inline constexpr double kStdSigma03Alpha20 = 14.3934863637534007;
// Lognormal(1.4, 1.25): E[C 1{C < 5}] and P(C < 5).
inline constexpr double kLognormalPartialBelow5 = 1.235836954185338001;
inline constexpr double kLognormalCdf5 = 0.56653147519536897660;

/// Sample-std Monte-Carlo error for a lognormal weight with E[w] = 1 and
/// log-variance v, from the analytic fourth central moment:
///   Var(s^2) ~ (mu4 - sigma^4) / n,  se(s) ~ sd(s^2) / (2 s).
inline double lognormal_weight_std_se(double log_variance, std::size_t n) {
  const double v = log_variance;
  const double var = std::expm1(v);
  if (var == 0.0) return 0.0;
  const double mu4 = std::exp(6 * v) - 4 * std::exp(3 * v) + 6 * std::exp(v) - 3;
  const double var_of_var = (mu4 - var * var) / static_cast<double>(n);
  return std::sqrt(std::max(0.0, var_of_var)) / (2.0 * std::sqrt(var));
}

struct GridResult {
  double objective = -std::numeric_limits<double>::infinity();
  bool any_eligible = false;
};

/// Exhaustive search over x in {-cap, -cap + step, ..., cap} for every
/// eligible cluster but one; the remaining one (largest dcost) is solved from
/// the cost equation and kept only if it lands in the box. Ineligible
/// clusters sit at x = 0.
inline GridResult grid_reallocation(const impatience::ReallocationProblem& p, double step = 1e-3) {
  std::vector<const impatience::ClusterMarginal*> elig;
  for (const auto& c : p.clusters) {
    if (c.roi_defined && c.dcost > 0.0) elig.push_back(&c);
  }
  GridResult out;
  if (elig.empty()) return out;
  out.any_eligible = true;
  std::sort(elig.begin(), elig.end(), [](auto* a, auto* b) { return a->dcost > b->dcost; });
  const auto* pivot = elig.front();
  const std::size_t free = elig.size() - 1;
  const long steps = std::lround(2.0 * p.cap_delta / step);
  std::vector<long> idx(free, 0);
  while (true) {
    long double cost = 0.0L, value = 0.0L;
    for (std::size_t j = 0; j < free; ++j) {
      const long double x = -static_cast<long double>(p.cap_delta) + idx[j] * static_cast<long double>(step);
      cost += x * elig[j + 1]->dcost;
      value += x * elig[j + 1]->dvalue;
    }
    const long double xp = -cost / pivot->dcost;
    if (std::fabs(static_cast<double>(xp)) <= p.cap_delta * (1.0 + 1e-12)) {
      out.objective = std::max(out.objective, static_cast<double>(value + xp * pivot->dvalue));
    }
    std::size_t k = 0;
    while (k < free && ++idx[k] > steps) idx[k++] = 0;
    if (k == free) break;
  }
  return out;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

/// Monte-Carlo expected profit of first bid b in the two-auction game.
inline MeanSe two_auction_profit_mc(double value, const impatience::PriceDistribution& first,
                                    const impatience::PriceDistribution& second, double bid, std::size_t n,
                                    std::uint64_t seed) {
  impatience::Xoshiro256 rng(seed);
  double s = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c1 = first.sample(rng);
    const double c2 = second.sample(rng);
    double profit = 0.0;
    if (c1 < bid) {
      profit = value - c1;
    } else if (c2 < value) {
      profit = value - c2;
    }
    s += profit;
    ss += profit * profit;
  }
  const double dn = static_cast<double>(n);
  const double mean = s / dn;
  const double var = (ss - dn * mean * mean) / (dn - 1.0);
  return {mean, std::sqrt(std::max(0.0, var) / dn)};
}

/// Central finite-difference gradient of f at w.
template <class F>
std::vector<double> central_gradient(F&& f, std::vector<double> w, double h) {
  std::vector<double> g(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double keep = w[j];
    w[j] = keep + h;
    const double up = f(w);
    w[j] = keep - h;
    const double down = f(w);
    w[j] = keep;
    g[j] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace oracle
