#include "impatience/weight_profile.hpp"

#include <cmath>

#include "impatience/error.hpp"
#include "impatience/kernels.hpp"
#include "impatience/rng.hpp"
#include "impatience/summation.hpp"
#include "impatience/weights.hpp"

namespace impatience {

double analytic_exact_weight_std(const RandomizationSpec& spec, double alpha) {
  if (!(alpha > 0.0)) throw DomainError("alpha must be > 0");
  const double l = std::log(alpha);
  return std::sqrt(std::expm1(l * l / (spec.sigma * spec.sigma)));
}

std::vector<WeightStdRow> weight_std_profile(const RandomizationSpec& spec, const std::vector<double>& alphas,
                                             std::size_t n_samples, std::uint64_t seed) {
  spec.validate();
  if (n_samples < 2) throw ValidationError("n_samples", "must be >= 2");
  for (double a : alphas) {
    if (!(a > 0.0) || !std::isfinite(a)) throw ValidationError("alphas", "every alpha must be finite and > 0");
  }

  Xoshiro256 rng(derive_seed(seed, 0x3E16));
  std::vector<double> z(n_samples);
  for (auto& v : z) {
    const double theta = std::exp(spec.mu + spec.sigma * standard_normal(rng));
    v = linear_weight(theta, spec);
  }
  const double sd_z = std::sqrt(mean_var(z).variance);

  std::vector<WeightStdRow> rows;
  rows.reserve(alphas.size());
  std::vector<double> w(n_samples);
  for (double a : alphas) {
    const auto coef = exact_weight_coefficients(spec, a);
    kernels::exp_affine(z, coef.slope, coef.offset, w);
    const auto mv = mean_var(w);
    WeightStdRow r;
    r.alpha = a;
    r.std_exact = std::sqrt(mv.variance);
    r.std_linear = std::abs(a - 1.0) * sd_z;
    r.std_exact_analytic = analytic_exact_weight_std(spec, a);
    r.mean_exact = mv.mean;
    r.se_mean = r.std_exact / std::sqrt(static_cast<double>(n_samples));
    r.n_samples = n_samples;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace impatience
