#pragma once

// Experiment configuration, read from JSON. Every section and key is
// optional; unknown keys are rejected so typos do not silently fall back to
// defaults.
//
//   {
//     "simulation":    {"n_users": 100000, "auctions_per_user": 20, "auction_count": "poisson",
//                       "activity_ratio": 2, "value_per_conversion": 100,
//                       "base_conversion_prob": 0.05, "fatigue_decay": 0.8,
//                       "competition": "lognormal:1.4:1.25",
//                       "initial_exposure": [0.3, 0.2, 0.15, 0.12, 0.1, 0.08, 0.05],
//                       "buckets": [0, 1, 2, 3, 4, 5]},
//     "randomization": {"mu": 0, "sigma": 0.3},
//     "experiment":    {"seed": 1, "resamples": 1000, "level": 0.95, "cap": 0.2,
//                       "sweep": [0, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5],
//                       "value_metric": "value_predicted", "ab_users": 1000000,
//                       "common_random_numbers": false,
//                       "profile_alphas": [...], "profile_samples": 100000},
//     "predictor":     {"l2": 0, "max_iters": 1000, "tol": 1e-8,
//                       "fatigue_buckets": [0, 1, 2, 3, 4, 5]},
//     "two_auctions":  {"ticket_value": 100, "first": "uniform:0:100",
//                       "second": "uniform:0:100", "grid_step": 0.01}
//   }

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "impatience/domain.hpp"
#include "impatience/predictor.hpp"
#include "impatience/simulator.hpp"

namespace impatience {

struct ExperimentSettings {
  std::uint64_t seed = 1;
  std::size_t resamples = 1000;
  double level = 0.95;
  double cap = 0.2;
  std::vector<double> sweep{0.0, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5};
  Metric value_metric = Metric::value_predicted;
  std::size_t ab_users = 1000000;
  bool common_random_numbers = false;
  std::vector<double> profile_alphas{0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 1.75, 2.0};
  std::size_t profile_samples = 100000;
};

struct PredictorSettings {
  double l2 = 0.0;
  int max_iters = 1000;
  double tol = 1e-8;
  std::vector<double> fatigue_buckets{0, 1, 2, 3, 4, 5};
};

struct TwoAuctionSettings {
  double ticket_value = 100.0;
  PriceDistribution first = PriceDistribution::uniform(0.0, 100.0);
  PriceDistribution second = PriceDistribution::uniform(0.0, 100.0);
  double grid_step = 0.01;
};

struct ExperimentConfig {
  SimConfig simulation;
  RandomizationSpec randomization;
  ExperimentSettings experiment;
  PredictorSettings predictor;
  TwoAuctionSettings two_auctions;

  void validate() const;
  /// Canonical JSON (sorted keys, every field present).
  std::string canonical_json() const;
  /// content_hash of canonical_json().
  std::string hash() const;
};

/// Throws ParseError for malformed JSON and ValidationError for unknown
/// keys, wrong types or invalid values.
ExperimentConfig parse_config(std::string_view json_text);
/// Throws IoError naming the path when the file cannot be read.
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace impatience
