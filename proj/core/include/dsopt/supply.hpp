#pragma once

// Prescriptive layer: a dense decision network mapping (forecast, state) to
// replenishment actions, plus the cost/constraint objective it is trained on.
//
// Unit conventions: SupplyState carries raw units (stock in product units,
// costs in currency per unit). During training the demand-side quantities
// (forecast, realized demand, stock) are expressed in normalized demand
// units; the per-unit cost coefficients then price normalized quantities and
// the configured cost scale keeps alpha/beta comparable. The accounting
// formulas are invariant to that affine change of units because stock, order
// and demand only ever enter as differences.

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dsopt/autodiff.hpp"

namespace dsopt {

// Per-period supply context, twelve features in a fixed order.
struct SupplyState {
  double stock = 0.0;
  double lead_actual = 0.0;  // days
  double lead_max = 0.0;     // days
  double r_supplier = 1.0;   // reliability of the recorded supplier, in [0,1]
  double r_min = 0.0;        // reliability floor, in [0,1]
  double defect_rate = 0.0;  // in [0,1]
  double c_prod = 0.0;       // per unit
  double c_hold = 0.0;       // per unit held per period
  std::array<double, 3> c_trans{0.0, 0.0, 0.0};  // per unit, one per mode
  double c_short = 0.0;      // per unit short

  static constexpr std::size_t kFeatureCount = 12;

  std::array<double, kFeatureCount> features() const;
  static SupplyState from_features(const std::array<double, kFeatureCount>& f);
  void validate() const;
};

struct Supplier {
  std::string name;
  double reliability = 1.0;
  double lead_time = 0.0;
};
using SupplierCatalog = std::vector<Supplier>;

// Raw network outputs. The discrete choices are the score argmaxes
// (ties resolved toward the lowest index).
struct DecisionVector {
  double q_order = 0.0;
  std::vector<double> supplier_scores{0.0};
  std::array<double, 3> mode_scores{0.0, 0.0, 0.0};

  std::size_t chosen_supplier() const;
  std::size_t chosen_mode() const;
};

struct CostBreakdown {
  double production = 0.0;
  double inventory = 0.0;
  double transport = 0.0;
  double shortage = 0.0;
  double total = 0.0;
};

struct CostParams {
  double alpha = 0.5;
  double beta = 0.5;
  double rho_demand = 10.0;
  double rho_lead = 10.0;
  double rho_rel = 10.0;
  double smooth_tau = 0.1;  // width of the sigmoid service-level surrogate
  double cost_scale = 1.0;  // divides total cost inside the loss

  void validate() const;
};

// Exact per-period accounting: production and transport are priced on the
// order, holding on leftover stock, shortage on unmet demand.
CostBreakdown total_cost(const DecisionVector& o, const SupplyState& s,
                         double realized_demand);

// Hinge penalties for the demand-cover, lead-time, and reliability
// constraints. Reliability is evaluated at the chosen supplier; an empty
// catalog falls back to the state's recorded supplier.
double constraint_penalty(const DecisionVector& o, const SupplyState& s,
                          double forecast, const CostParams& p,
                          const SupplierCatalog& catalog);

// Fraction of periods in which demand was fully met.
double service_level(std::size_t fulfilled, std::size_t total);

// alpha * C_total / cost_scale + beta * (1 - SL) + penalty
double supply_loss(double c_total, double sl, const CostParams& p, double penalty);

struct RepairOptions {
  bool demand_cover = true;
};

struct RepairedDecision {
  double q_order = 0.0;
  std::size_t supplier = 0;
  std::size_t mode = 0;
  bool violation = false;  // no supplier met both feasibility constraints
};

// Inference-time feasibility: raises the order to cover the forecast and
// restricts the supplier argmax to candidates satisfying the reliability and
// lead-time constraints, falling back to the most reliable one.
RepairedDecision repair(const DecisionVector& o, double forecast,
                        const SupplyState& s, const SupplierCatalog& catalog,
                        const RepairOptions& opts = {});

// Rule-based decision used by the two-stage pipeline and the recurrent-policy
// baselines: order exactly the uncovered forecast, ship by the cheapest mode.
DecisionVector cover_decision(double forecast, const SupplyState& s,
                              std::size_t supplier_count = 1);

// Per-feature affine normalization of network inputs (identity by default).
struct StateScaler {
  std::array<double, SupplyState::kFeatureCount> offset{};
  std::array<double, SupplyState::kFeatureCount> range;

  StateScaler() { range.fill(1.0); }
  std::array<double, SupplyState::kFeatureCount> transform(const SupplyState& s) const;
};

struct DecisionNetConfig {
  std::array<std::size_t, 2> hidden{64, 32};
  double dropout = 0.3;
  std::size_t supplier_count = 1;
};

// (forecast, state) -> (order quantity, supplier scores, mode scores).
// Input is the 13-vector [forecast] ++ state features; the order head goes
// through softplus so the quantity is nonnegative by construction.
class DecisionNet {
 public:
  DecisionNet(DecisionNetConfig cfg, std::uint64_t seed);

  struct Nodes {
    ad::Tensor q_order;          // {1}
    ad::Tensor supplier_scores;  // {supplier_count}
    ad::Tensor mode_scores;      // {3}
  };

  // Records the forward pass on the active tape. A non-null rng enables the
  // training-time dropout mask on the first hidden layer.
  Nodes forward_nodes(const ad::Tensor& forecast, const SupplyState& s,
                      std::mt19937_64* dropout_rng = nullptr) const;

  // Eval-mode forward on a scratch tape.
  DecisionVector forward(double forecast, const SupplyState& s) const;

  const DecisionNetConfig& config() const { return cfg_; }
  StateScaler& state_scaler() { return scaler_; }
  const StateScaler& state_scaler() const { return scaler_; }

  std::vector<std::pair<std::string, ad::Tensor*>> params();
  std::size_t param_count() const;

 private:
  DecisionNetConfig cfg_;
  StateScaler scaler_;
  ad::Tensor w1_, b1_, w2_, b2_;
  ad::Tensor wq_, bq_, wsup_, bsup_, wmode_, bmode_;
};

// Differentiable supply objective for one period, recorded on the active
// tape. Discrete supplier/mode choices enter through softmax weights so the
// scores receive gradient; reported metrics use the exact argmax accounting
// instead. Demand-side quantities are in normalized units.
struct SupplyLossNodes {
  ad::Tensor loss;     // scalar
  ad::Tensor q_order;  // {1}
};
SupplyLossNodes supply_loss_nodes(const DecisionNet& net, const ad::Tensor& forecast,
                                  const SupplyState& state_raw, double stock,
                                  double realized_demand, const CostParams& p,
                                  const SupplierCatalog& catalog,
                                  std::mt19937_64* dropout_rng = nullptr);

}  // namespace dsopt
