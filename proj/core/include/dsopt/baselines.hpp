#pragma once

// Classical baselines: economic order quantity, reorder-point replenishment,
// naive and seasonal-naive forecasts, and a least-squares autoregression.
// The GRU baseline reuses the forecaster scaffolding with gru cells.

#include <cstddef>
#include <vector>

#include "dsopt/errors.hpp"

namespace dsopt {

struct EoqParams {
  double demand = 0.0;        // D: demand over the horizon
  double order_cost = 0.0;    // S: fixed cost per order
  double holding_cost = 0.0;  // H: per unit per horizon
};

// Q* = sqrt(2 D S / H)
double eoq_quantity(const EoqParams& p);

struct ReorderPolicy {
  double reorder_point = 0.0;
  double order_qty = 0.0;
  double safety_factor = 1.645;
};

// Order `order_qty` when stock <= reorder point (boundary inclusive), else 0.
double reorder_decision(double stock, const ReorderPolicy& p);

// ROP = mean * lead_time + z * std * sqrt(lead_time)
ReorderPolicy make_reorder_policy(double mean_demand, double demand_std,
                                  double lead_time, double order_qty,
                                  double safety_factor = 1.645);

// Next-step forecast = last observed value.
double naive_forecast(const std::vector<double>& series);

// Next-step forecast = value one season ago.
double seasonal_naive_forecast(const std::vector<double>& series, std::size_t period);

struct ArModel {
  std::size_t order = 0;
  double intercept = 0.0;
  std::vector<double> coeffs;  // lag 1 .. order
  bool ridge_fallback = false; // normal equations were singular
};

// Ordinary least squares on the lagged design matrix (with intercept);
// singular systems fall back to a 1e-8 ridge and are flagged.
ArModel linear_ar_fit(const std::vector<double>& series, std::size_t order);

double linear_ar_forecast(const std::vector<double>& history, const ArModel& m);

}  // namespace dsopt
