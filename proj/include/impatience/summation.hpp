#pragma once

// Error-free transformations and a Neumaier accumulator for the scalar
// reductions outside the kernel layer.

#include <cmath>
#include <span>

namespace impatience {

/// s + e == a + b exactly.
struct TwoSum {
  double sum;
  double err;
};

inline TwoSum two_sum(double a, double b) noexcept {
  const double s = a + b;
  const double bb = s - a;
  return {s, (a - (s - bb)) + (b - bb)};
}

/// p + e == a * b exactly (requires a correctly rounded fma).
inline TwoSum two_prod(double a, double b) noexcept {
  const double p = a * b;
  return {p, std::fma(a, b, -p)};
}

class CompensatedSum {
 public:
  void add(double x) noexcept {
    const TwoSum t = two_sum(sum_, x);
    sum_ = t.sum;
    comp_ += t.err;
  }
  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  void merge(const CompensatedSum& other) noexcept {
    add(other.sum_);
    comp_ += other.comp_;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) noexcept {
  CompensatedSum acc;
  for (double x : xs) acc.add(x);
  return acc.value();
}

/// Mean and unbiased sample variance, two-pass.
struct MeanVar {
  double mean = 0.0;
  double variance = 0.0;
};

inline MeanVar mean_var(std::span<const double> xs) noexcept {
  MeanVar mv;
  const auto n = xs.size();
  if (n == 0) return mv;
  mv.mean = compensated_sum(xs) / static_cast<double>(n);
  if (n < 2) return mv;
  CompensatedSum ss;
  for (double x : xs) {
    const double d = x - mv.mean;
    ss.add(d * d);
  }
  mv.variance = ss.value() / static_cast<double>(n - 1);
  return mv;
}

}  // namespace impatience
