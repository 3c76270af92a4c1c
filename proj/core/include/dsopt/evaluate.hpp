#pragma once

// Forecast metrics, the discrete-time replenishment replay simulator, and the
// policy adapters that drive it.

#include <functional>
#include <span>
#include <vector>

#include "dsopt/baselines.hpp"
#include "dsopt/forecaster.hpp"
#include "dsopt/preprocess.hpp"
#include "dsopt/supply.hpp"

namespace dsopt {

struct ForecastMetrics {
  double mae = 0.0;
  double rmse = 0.0;
  double mape = 0.0;   // percent, over nonzero actuals
  double smape = 0.0;  // percent; zero-denominator terms contribute 0
  std::size_t mape_skipped = 0;  // zero-actual terms excluded from MAPE
};

// Computed in whatever units the inputs carry; callers inverse-scale first
// when original units are wanted.
ForecastMetrics forecast_metrics(const std::vector<double>& actuals,
                                 const std::vector<double>& predictions);

struct OpsMetrics {
  double inventory_cost = 0.0;  // sum of holding cost over the horizon
  double stockout_rate = 0.0;   // percent of periods with unmet demand
  double service_level = 0.0;   // percent; stockout_rate = 100 - service_level
  double total_cost = 0.0;      // sum over the horizon
};

struct SimPeriod {
  std::size_t t = 0;
  double demand = 0.0;
  double order_placed = 0.0;
  double arrivals = 0.0;
  double stock_after_arrivals = 0.0;
  double served = 0.0;
  double unmet = 0.0;
  double end_stock = 0.0;
  std::size_t mode = 0;
  std::size_t supplier = 0;
  CostBreakdown cost;
  bool fulfilled = false;
};

struct SimResult {
  OpsMetrics metrics;
  std::vector<SimPeriod> ledger;
  double initial_stock = 0.0;
  double end_stock = 0.0;
  double total_delivered = 0.0;
  double total_served = 0.0;
  std::size_t orders_placed = 0;  // periods with a positive order
};

struct PolicyContext {
  std::size_t t = 0;
  double on_hand = 0.0;       // before this period's arrivals
  double pipeline = 0.0;      // everything ordered but not yet arrived
  double arriving_now = 0.0;
  std::span<const double> history;  // realized demand for periods < t
  const SupplyState* state = nullptr;
};

struct PeriodDecision {
  double order_qty = 0.0;
  std::size_t mode = 0;
  std::size_t supplier = 0;
};

using PolicyFn = std::function<PeriodDecision(const PolicyContext&)>;

struct SimOptions {
  double initial_stock = 0.0;
};

// Period sequence: the policy decides (seeing on-hand and pipeline), the
// order is placed and priced (production + transport), orders due this
// period arrive (a zero lead time arrives immediately), demand is served
// from stock, and holding/shortage costs close the books. Unserved demand
// is lost, not backordered.
SimResult simulate(const PolicyFn& policy, const std::vector<double>& demand,
                   const std::vector<SupplyState>& states, const SimOptions& opts);

// Fixed per-period decisions.
SimResult simulate(const std::vector<PeriodDecision>& decisions,
                   const std::vector<double>& demand,
                   const std::vector<SupplyState>& states, const SimOptions& opts);

// ---------------------------------------------------------------------------
// Policy adapters
// ---------------------------------------------------------------------------

// Orders q_star whenever inventory position falls below the reorder level.
PolicyFn make_eoq_policy(double q_star, double reorder_level);

// Classic (ROP, Q) continuous review on inventory position.
PolicyFn make_reorder_point_policy(const ReorderPolicy& policy);

// Forecast-driven policies. The forecast feeding each period is a one-step
// prediction from the realized demand history (dataset preamble + simulated
// segment so far). With a decision net the order is the repaired network
// output; without one it is the repaired cover rule.
struct ModelPolicyInputs {
  const Forecaster* forecaster = nullptr;  // null -> naive last-value forecast
  const DecisionNet* net = nullptr;        // null -> cover rule
  const WindowedDataset* dataset = nullptr;
  std::size_t segment_start = 0;  // global time index where simulation begins
  SupplierCatalog catalog;
};
PolicyFn make_model_policy(const ModelPolicyInputs& inputs);

}  // namespace dsopt
