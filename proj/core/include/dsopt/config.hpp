#pragma once

// Run configuration: a JSON key tree with defaults mirroring the default
// architecture and training settings. Unknown keys fail fast, and the fully
// resolved configuration is echoed into the output directory so a run can be
// reproduced from its artifacts alone.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dsopt/experiment.hpp"
#include "dsopt/synthetic.hpp"

namespace dsopt {

struct DatasetConfig {
  std::string kind = "synthetic";  // synthetic | csv
  SyntheticSpec synthetic;
  std::string sales_csv;
  std::string supply_csv;
  std::map<std::string, std::string> sales_schema;   // role -> header
  std::map<std::string, std::string> supply_schema;  // role -> header
  std::vector<std::string> context_features;         // categorical roles to embed
  StateRanges state_defaults;  // fills state fields the schema leaves unmapped
};

struct EvalConfig {
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<std::string> baselines{"two_stage", "gru_policy", "eoq",
                                     "reorder", "naive", "seasonal_naive",
                                     "linear_ar"};
  std::vector<std::string> ablation{"no_embeddings", "no_augmentation",
                                    "forecast_only", "supply_only"};
  std::vector<SweepAxis> sweep{
      {"learning_rate", {1e-4, 5e-4, 1e-3}},
      {"batch_size", {32, 64, 128}},
      {"embed_dim", {16, 32, 64}},
  };
  double initial_stock = -1.0;
  double eoq_order_cost = 50.0;
  std::size_t seasonal_period = 12;
  std::size_t ar_order = 7;
};

struct RunConfig {
  DatasetConfig dataset;
  PipelineOptions pipeline;
  ForecasterConfig model;
  DecisionNetConfig supply_net;
  TrainConfig train;
  CostParams cost;
  SupplierCatalog catalog;
  EvalConfig evaluate;
  std::string out_dir = "out";
  std::size_t workers = 1;
  bool two_phase = true;

  ExperimentSettings experiment_settings() const;
};

// Strict parse: any unrecognized key anywhere in the tree is a ConfigError.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

// Canonical resolved echo (sorted keys, full defaults).
std::string dump_config(const RunConfig& cfg);

// FNV-1a over the canonical dump.
std::uint64_t config_hash(const RunConfig& cfg);
std::string config_hash_hex(const RunConfig& cfg);

}  // namespace dsopt
