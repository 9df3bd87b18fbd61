#include "impatience/weights.hpp"

#include <cmath>

#include "impatience/error.hpp"

namespace impatience {

double exact_weight(double theta, const RandomizationSpec& spec, double alpha) {
  if (!(theta > 0.0)) throw DomainError("exact_weight: theta must be > 0");
  if (!(alpha > 0.0)) throw DomainError("exact_weight: alpha must be > 0");
  const double la = std::log(alpha);
  const double s2 = spec.sigma * spec.sigma;
  return std::exp((2.0 * la * (std::log(theta) - spec.mu) - la * la) / (2.0 * s2));
}

double linear_weight(double theta, const RandomizationSpec& spec) {
  if (!(theta > 0.0)) throw DomainError("linear_weight: theta must be > 0");
  return (std::log(theta) - spec.mu) / (spec.sigma * spec.sigma);
}

ExpAffine exact_weight_coefficients(const RandomizationSpec& spec, double alpha) {
  if (!(alpha > 0.0)) throw DomainError("exact_weight: alpha must be > 0");
  const double la = std::log(alpha);
  return {la, -la * la / (2.0 * spec.sigma * spec.sigma)};
}

}  // namespace impatience
