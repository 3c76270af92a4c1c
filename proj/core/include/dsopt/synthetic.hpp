#pragma once

// Synthetic demand generator: level + trend + seasonality + noise + sparse
// shocks, optional category-dependent level shifts (so embeddings carry
// signal), and per-period supply states drawn from configured ranges.

#include <array>
#include <cstdint>

#include "dsopt/preprocess.hpp"

namespace dsopt {

struct StateRanges {
  std::array<double, 2> stock{40.0, 80.0};
  std::array<double, 2> lead_time{1.0, 3.0};
  double lead_max = 5.0;
  std::array<double, 2> reliability{0.8, 0.99};
  double reliability_min = 0.6;
  std::array<double, 2> defect_rate{0.0, 0.05};
  double unit_cost_production = 1.0;
  double unit_cost_holding = 0.5;
  std::array<double, 3> unit_cost_transport{0.2, 0.3, 0.4};
  double unit_cost_shortage = 2.0;
};

struct SyntheticSpec {
  std::size_t horizon = 400;
  double base_level = 100.0;
  double trend_slope = 0.0;
  double seasonal_amplitude = 30.0;
  std::size_t seasonal_period = 12;
  double noise_std = 5.0;
  double shock_probability = 0.0;
  double shock_magnitude = 0.0;
  std::uint64_t seed = 1;

  // Category block: index changes every `category_block` periods and shifts
  // the level by category_shift * (index - (count-1)/2).
  std::size_t num_categories = 0;
  double category_shift = 0.0;
  std::size_t category_block = 16;

  StateRanges states;

  void validate(std::size_t window_len) const;
};

struct SyntheticResult {
  SeriesBundle bundle;
  std::size_t shock_count = 0;
};

SyntheticResult generate_synthetic(const SyntheticSpec& spec);

}  // namespace dsopt
