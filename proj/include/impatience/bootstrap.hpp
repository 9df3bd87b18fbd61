#pragma once

// Percentile bootstrap over users. A resample is represented by its
// multiplicity vector (how many times each user was drawn), so a statistic
// that is a sum over users becomes a dot product with the multiplicities.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "impatience/domain.hpp"

namespace impatience {

struct BootstrapOptions {
  std::size_t n_resamples = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
  unsigned threads = 0;

  void validate() const;
};

using WeightedStatistic = std::function<double(std::span<const double> multiplicity)>;
using WeightedStatistics = std::function<std::vector<double>(std::span<const double> multiplicity)>;

/// Multiplicities of resample `index`: n_units draws with replacement.
std::vector<double> resample_multiplicities(std::size_t n_units, std::uint64_t seed, std::size_t index);

/// Linear-interpolated quantile (type 7) of an ascending sample.
double quantile_sorted(std::span<const double> sorted, double q);

/// Point estimate is the statistic at unit multiplicities. Replicates that
/// come out non-finite (an undefined ratio, say) are dropped; if every
/// replicate is dropped the bounds are NaN.
std::vector<Interval> bootstrap_ci(std::size_t n_units, const WeightedStatistics& statistic,
                                   const BootstrapOptions& options);

Interval bootstrap_ci(std::size_t n_units, const WeightedStatistic& statistic, const BootstrapOptions& options);

inline Interval bootstrap_ci(const RandomizedLog& log, const WeightedStatistic& statistic,
                             const BootstrapOptions& options) {
  return bootstrap_ci(log.users.size(), statistic, options);
}

}  // namespace impatience
