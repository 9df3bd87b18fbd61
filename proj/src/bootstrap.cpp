#include "impatience/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "impatience/error.hpp"
#include "impatience/parallel.hpp"
#include "impatience/rng.hpp"

namespace impatience {

void BootstrapOptions::validate() const {
  if (n_resamples < 100) throw ValidationError("n_resamples", "must be >= 100");
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("level", "must lie in (0, 1)");
}

std::vector<double> resample_multiplicities(std::size_t n_units, std::uint64_t seed, std::size_t index) {
  std::vector<double> counts(n_units, 0.0);
  if (n_units == 0) return counts;
  Xoshiro256 rng(derive_seed(seed, 0xB007, index));
  std::uniform_int_distribution<std::size_t> pick(0, n_units - 1);
  for (std::size_t j = 0; j < n_units; ++j) counts[pick(rng)] += 1.0;
  return counts;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<Interval> bootstrap_ci(std::size_t n_units, const WeightedStatistics& statistic,
                                   const BootstrapOptions& options) {
  options.validate();
  const std::vector<double> ones(n_units, 1.0);
  const auto point = statistic(ones);
  const std::size_t k = point.size();

  std::vector<std::vector<double>> replicates(options.n_resamples);
  parallel_for(options.n_resamples, options.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      replicates[r] = statistic(resample_multiplicities(n_units, options.seed, r));
      if (replicates[r].size() != k) throw Error("bootstrap statistic changed its output size");
    }
  });

  const double tail = (1.0 - options.level) / 2.0;
  std::vector<Interval> out(k);
  std::vector<double> column;
  column.reserve(options.n_resamples);
  for (std::size_t j = 0; j < k; ++j) {
    column.clear();
    for (const auto& rep : replicates) {
      if (std::isfinite(rep[j])) column.push_back(rep[j]);
    }
    std::sort(column.begin(), column.end());
    out[j] = {point[j], quantile_sorted(column, tail), quantile_sorted(column, 1.0 - tail)};
  }
  return out;
}

Interval bootstrap_ci(std::size_t n_units, const WeightedStatistic& statistic, const BootstrapOptions& options) {
  const WeightedStatistics wrapped = [&](std::span<const double> m) { return std::vector<double>{statistic(m)}; };
  return bootstrap_ci(n_units, wrapped, options).front();
}

}  // namespace impatience
