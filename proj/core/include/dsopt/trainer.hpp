#pragma once

// Joint optimization of the forecaster and the decision network: two-phase
// training under the weighted total loss, Adam updates, early stopping on
// validation loss, and the lambda grid search.
//
// The coupling is the point: in joint training the supply loss reaches the
// forecaster parameters through the recorded forecast node, so cost and
// service feedback shape the forecasts. `detach_forecast` severs that path
// and reproduces the classical two-stage pipeline.

#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "dsopt/forecaster.hpp"
#include "dsopt/preprocess.hpp"
#include "dsopt/supply.hpp"

namespace dsopt {

struct TrainConfig {
  double lambda1 = 0.6;
  double lambda2 = 0.4;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  std::uint64_t seed = 1;
  bool detach_forecast = false;  // stop-gradient through the forecast
  bool stochastic = false;       // feed a sampled forecast to the decision net
  double clip_norm = 5.0;        // global-norm gradient clip; 0 disables

  void validate() const;
};

using NamedParams = std::vector<std::pair<std::string, ad::Tensor*>>;

class AdamOptimizer {
 public:
  AdamOptimizer(const NamedParams& params, const TrainConfig& cfg);

  // One update over all parameters; aborts without touching anything if any
  // gradient entry is non-finite (the offending parameter is named).
  void step(const NamedParams& params, const std::vector<std::vector<double>>& grads);

  std::size_t step_count() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_, clip_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_mae = 0.0;        // original demand units
  double val_rmse = 0.0;
  double val_mape = 0.0;       // percent
  double val_sl = 0.0;         // fraction in [0,1]
  double val_total_cost = 0.0; // currency per period
};

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history);

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 1-based
  double best_val_loss = 0.0;
  std::size_t epochs_run = 0;
  bool stopped_early = false;
};

// Mean per-period cost of the naive cover policy (last value as forecast,
// order the uncovered gap) over the training split, in normalized units.
// Used as the cost normalizer so alpha/beta/rho are scale-free.
double compute_cost_scale(const WindowedDataset& ds);

// The joint mini-batch objective, recorded on the active tape. Parameters
// must already be watched by the caller when gradients are wanted. Null rngs
// give the eval-mode (dropout-free, mean-forecast) value.
struct BatchLossParts {
  ad::Tensor total;
  ad::Tensor forecast;
  ad::Tensor supply;
};

// lambda1 * forecast_loss + lambda2 * supply_loss, on the active tape.
ad::Tensor total_loss_nodes(const ad::Tensor& forecast_loss,
                            const ad::Tensor& supply_loss, double lambda1,
                            double lambda2);
BatchLossParts batch_loss_nodes(const Forecaster& forecaster, const DecisionNet& net,
                                const WindowedDataset& ds,
                                const std::vector<std::size_t>& sample_indices,
                                const CostParams& cost, const SupplierCatalog& catalog,
                                const TrainConfig& cfg,
                                std::mt19937_64* forecaster_dropout_rng,
                                std::mt19937_64* decision_dropout_rng,
                                std::mt19937_64* sample_rng);

// Phase 1: forecaster alone, minimizing MSE; lambda fields are ignored.
TrainResult pretrain_forecaster(Forecaster& forecaster, const WindowedDataset& ds,
                                const TrainConfig& cfg);

// Phase 2: joint updates. The forecaster receives the full weighted gradient;
// the decision net only ever sees the supply term.
TrainResult train_joint(Forecaster& forecaster, DecisionNet& net,
                        const WindowedDataset& ds, const CostParams& cost,
                        const SupplierCatalog& catalog, const TrainConfig& cfg);

// Decision net alone against a frozen forecast source (the supply-only
// ablation and small-instance policy studies). Validation criterion is the
// mean supply objective.
TrainResult train_decision_only(DecisionNet& net, const WindowedDataset& ds,
                                const CostParams& cost, const SupplierCatalog& catalog,
                                const TrainConfig& cfg,
                                const std::function<double(const Sample&)>& forecast_fn);

struct GridCell {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double best_val_loss = 0.0;
  std::size_t best_epoch = 0;
};

struct GridSearchResult {
  std::size_t best_index = 0;
  std::vector<GridCell> table;
  const GridCell& best() const { return table[best_index]; }
};

// Fresh models per cell (from the factory), identical seeds and splits;
// selection by validation total loss at each run's best epoch, ties resolved
// toward the smaller lambda2.
using ModelFactory =
    std::function<std::pair<std::unique_ptr<Forecaster>, std::unique_ptr<DecisionNet>>()>;

GridSearchResult grid_search_lambdas(const ModelFactory& make_models,
                                     const WindowedDataset& ds, const CostParams& cost,
                                     const SupplierCatalog& catalog,
                                     const std::vector<std::pair<double, double>>& grid,
                                     const TrainConfig& base_cfg);

// lambda1 in [0.5, 0.9], lambda2 in [0.1, 0.5], step 0.1: 25 cells.
std::vector<std::pair<double, double>> default_lambda_grid();

}  // namespace dsopt
