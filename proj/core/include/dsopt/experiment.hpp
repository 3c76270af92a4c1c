#pragma once

// Experiment harness: one full train-and-evaluate run, the ablation grid,
// the parameter sensitivity sweep, and the multi-model comparison table with
// paired significance tests. Seed replicates and grid cells are independent
// jobs and may run on a small worker pool; results merge by index so the
// output never depends on scheduling.

#include <cstdint>
#include <string>
#include <vector>

#include "dsopt/evaluate.hpp"
#include "dsopt/stats.hpp"
#include "dsopt/trainer.hpp"

namespace dsopt {

struct ExperimentSettings {
  ForecasterConfig forecaster;  // vocab sizes are filled from the dataset
  DecisionNetConfig decision;   // supplier head sized from the catalog
  TrainConfig train;            // seed overridden per replicate
  CostParams cost;              // cost_scale <= 0 requests the automatic scale
  SupplierCatalog catalog;
  PipelineOptions pipeline;
  bool two_phase = true;
  double initial_stock = -1.0;  // < 0: recorded stock at the segment start

  // Baseline knobs.
  double eoq_order_cost = 50.0;  // fixed cost per order for the EOQ mapping
  std::size_t seasonal_period = 12;
  std::size_t ar_order = 7;
};

enum class Variant : std::uint8_t {
  full_hybrid,
  no_embeddings,
  no_augmentation,
  forecast_only,  // lambda2 = 0 + detached: two-stage pipeline, cover-rule orders
  supply_only,    // frozen naive forecast feeding the decision net
};

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct RunOutcome {
  bool has_forecast_metrics = true;
  ForecastMetrics forecast;  // original units, test split
  OpsMetrics ops;            // simulated over the test segment
  SimResult sim;             // full test-segment replay (ops == sim.metrics)
  TrainResult phase1;
  TrainResult phase2;
  double cost_scale = 1.0;
  std::size_t segment_start = 0;  // global time index of the first simulated period
};

RunOutcome run_experiment(const SeriesBundle& bundle,
                          const ExperimentSettings& settings, Variant variant,
                          std::uint64_t seed);

struct AblationRow {
  std::string configuration;
  bool has_forecast = true;
  ForecastMetrics forecast;  // means over seeds
  OpsMetrics ops;
  std::size_t seed_count = 0;
};

// One row per configuration (full hybrid first), every cell a mean over the
// same seed list.
std::vector<AblationRow> ablation_run(const SeriesBundle& bundle,
                                      const ExperimentSettings& settings,
                                      const std::vector<Variant>& toggles,
                                      const std::vector<std::uint64_t>& seeds,
                                      std::size_t workers = 1);

struct SweepCell {
  std::string parameter;  // learning_rate | batch_size | embed_dim
  double value = 0.0;
  double mae = 0.0;
  double total_cost = 0.0;
  double service_level = 0.0;  // percent
  std::size_t seed_count = 0;
};

struct SweepAxis {
  std::string parameter;
  std::vector<double> values;
};

std::vector<SweepCell> sensitivity_sweep(const SeriesBundle& bundle,
                                         const ExperimentSettings& settings,
                                         const std::vector<SweepAxis>& grid,
                                         const std::vector<std::uint64_t>& seeds,
                                         std::size_t workers = 1);

struct ComparisonRow {
  std::string model;
  bool has_forecast = true;
  ForecastMetrics forecast;  // means over seeds
  OpsMetrics ops;
};

struct ComparisonResult {
  std::vector<ComparisonRow> rows;
  std::string reference_baseline;  // the comparison target of the t-tests
  bool has_tests = false;
  StatResult mae_test;   // per-seed hybrid vs reference MAE
  StatResult cost_test;  // per-seed hybrid vs reference total cost
};

// Known baseline names: two_stage, gru_policy, eoq, reorder, naive,
// seasonal_naive, linear_ar.
ComparisonResult compare_models(const SeriesBundle& bundle,
                                const ExperimentSettings& settings,
                                const std::vector<std::string>& baselines,
                                const std::vector<std::uint64_t>& seeds,
                                std::size_t workers = 1);

// Runs fn(0..n-1) on up to `workers` threads; exceptions are rethrown.
void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace dsopt
