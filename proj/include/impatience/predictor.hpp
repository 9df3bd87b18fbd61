#pragma once

// L2-regularized logistic regression for conversion rates, with an optional
// one-hot fatigue feature, plus per-bucket calibration curves.

#include <cstddef>
#include <string>
#include <vector>

#include "impatience/error.hpp"
#include "impatience/simulator.hpp"

namespace impatience {

struct DisplayEvent {
  /// Covariates without the intercept; the model always adds one.
  std::vector<double> features;
  /// Ordinal fatigue variable (prior exposure, time since last display, ...).
  double fatigue_value = 0.0;
  bool converted = false;
};

/// Buckets over the fatigue variable given by ascending lower bounds; the
/// last bucket is open-ended.
class FatigueEncoding {
 public:
  FatigueEncoding();  // {0,1,2,3,4,5}
  explicit FatigueEncoding(std::vector<double> lower_bounds);

  /// Throws ValidationError for a value below the first bound.
  int bucket_of(double value) const;
  int count() const noexcept { return static_cast<int>(lower_bounds_.size()); }
  const std::vector<double>& lower_bounds() const noexcept { return lower_bounds_; }
  std::string label(int bucket) const;

 private:
  std::vector<double> lower_bounds_;
};

struct CtrModel {
  /// [intercept, base features..., fatigue one-hot for buckets 1..B-1].
  std::vector<double> weights;
  std::size_t n_features = 0;
  bool includes_fatigue = false;
  FatigueEncoding encoding;

  double linear_score(const DisplayEvent& e) const;
  double predict(const DisplayEvent& e) const;
};

struct FitOptions {
  bool include_fatigue = false;
  FatigueEncoding encoding;
  double l2 = 0.0;
  int max_iters = 1000;
  double tol = 1e-8;
};

struct FitResult {
  CtrModel model;
  int iterations = 0;
  double grad_norm = 0.0;
  /// Penalized mean log-likelihood after each accepted step (first entry: start).
  std::vector<double> objective_history;
  double log_likelihood = 0.0;  // unpenalized, summed over events
};

class NonConvergence : public NumericalError {
 public:
  NonConvergence(double grad_norm, FitResult last);
  double grad_norm() const noexcept { return grad_norm_; }
  const FitResult& last() const noexcept { return last_; }

 private:
  double grad_norm_;
  FitResult last_;
};

/// Maximizes mean log-likelihood - l2/2 * |w|^2 (intercept unpenalized) by
/// full-batch gradient ascent with Barzilai-Borwein steps and Armijo
/// backtracking. Converged when max |gradient| < tol.
FitResult fit_ctr(const std::vector<DisplayEvent>& events, const FitOptions& options);

/// Penalized mean log-likelihood and its gradient, exposed for testing.
double ctr_objective(const std::vector<DisplayEvent>& events, const CtrModel& model, double l2,
                     std::vector<double>* gradient = nullptr);

struct CalibrationRow {
  int bucket = 0;
  std::string label;
  std::size_t n = 0;
  std::size_t positives = 0;
  double empirical_rate = 0.0;  // NaN when n == 0
  double mean_predicted = 0.0;  // NaN when n == 0
  /// sqrt(mean_predicted * (1 - mean_predicted) / n).
  double binomial_se = 0.0;
};

std::vector<CalibrationRow> calibration_curve(const CtrModel& model, const std::vector<DisplayEvent>& events,
                                              const FatigueEncoding& buckets);

/// Fatigue variable is the display's prior exposure; no other covariates.
std::vector<DisplayEvent> events_from_trace(const std::vector<DisplayRecord>& trace);

struct ColumnMapping {
  std::vector<std::string> features;
  std::string fatigue = "exposure";
  std::string label = "converted";
};

/// Label column must hold 0/1. Without a header, columns are named by
/// their 0-based index.
std::vector<DisplayEvent> read_events_csv(const std::string& path, const ColumnMapping& mapping,
                                          char delimiter = ',', bool has_header = true);

}  // namespace impatience
