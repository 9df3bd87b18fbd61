#pragma once

#include "impatience/domain.hpp"

namespace impatience {

/// Likelihood ratio between Lognormal(mu + ln alpha, sigma) and
/// Lognormal(mu, sigma) at theta:
///   exp((2 ln(alpha) (ln(theta) - mu) - ln(alpha)^2) / (2 sigma^2)).
/// Throws DomainError unless theta > 0 and alpha > 0.
double exact_weight(double theta, const RandomizationSpec& spec, double alpha);

/// d/d(alpha) of exact_weight at alpha = 1: (ln(theta) - mu) / sigma^2.
double linear_weight(double theta, const RandomizationSpec& spec);

/// exact_weight = exp(slope * linear_weight + offset).
struct ExpAffine {
  double slope = 0.0;
  double offset = 0.0;
};

ExpAffine exact_weight_coefficients(const RandomizationSpec& spec, double alpha);

}  // namespace impatience
