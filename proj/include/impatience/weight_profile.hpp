#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

#include "impatience/domain.hpp"

namespace impatience {

struct WeightStdRow {
  double alpha = 1.0;
  /// Empirical standard deviation of exact_weight over the draws.
  double std_exact = 0.0;
  /// |alpha - 1| * sd(linear_weight): spread of the first-order weight 1 + (alpha - 1) z.
  double std_linear = 0.0;
  /// sqrt(exp(ln^2(alpha) / sigma^2) - 1).
  double std_exact_analytic = 0.0;
  double mean_exact = 0.0;
  /// Standard error of mean_exact.
  double se_mean = 0.0;
  std::size_t n_samples = 0;
};

/// Every alpha is evaluated on the same theta draws.
std::vector<WeightStdRow> weight_std_profile(const RandomizationSpec& spec, const std::vector<double>& alphas,
                                             std::size_t n_samples, std::uint64_t seed);

double analytic_exact_weight_std(const RandomizationSpec& spec, double alpha);

}  // namespace impatience
