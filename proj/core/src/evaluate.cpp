#include "dsopt/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dsopt {

ForecastMetrics forecast_metrics(const std::vector<double>& actuals,
                                 const std::vector<double>& predictions) {
  if (actuals.empty() || actuals.size() != predictions.size()) {
    throw std::invalid_argument("forecast_metrics: empty or mismatched inputs");
  }
  ForecastMetrics m;
  double ae = 0.0, se = 0.0, ape = 0.0, sape = 0.0;
  std::size_t mape_n = 0;
  for (std::size_t i = 0; i < actuals.size(); ++i) {
    const double y = actuals[i];
    const double yhat = predictions[i];
    const double e = std::abs(y - yhat);
    ae += e;
    se += e * e;
    if (y != 0.0) {
      ape += e / std::abs(y);
      ++mape_n;
    } else {
      ++m.mape_skipped;
    }
    const double denom = std::abs(y) + std::abs(yhat);
    if (denom > 0.0) sape += 2.0 * e / denom;
  }
  const double n = double(actuals.size());
  m.mae = ae / n;
  m.rmse = std::sqrt(se / n);
  m.mape = mape_n > 0 ? 100.0 * ape / double(mape_n) : 0.0;
  m.smape = 100.0 * sape / n;
  return m;
}

// ---------------------------------------------------------------------------
// Simulator
// ---------------------------------------------------------------------------

SimResult simulate(const PolicyFn& policy, const std::vector<double>& demand,
                   const std::vector<SupplyState>& states, const SimOptions& opts) {
  if (demand.empty()) {
    throw std::invalid_argument("simulate: empty demand trace");
  }
  if (demand.size() != states.size()) {
    throw std::invalid_argument("simulate: demand trace has " +
                                std::to_string(demand.size()) + " periods but " +
                                std::to_string(states.size()) + " states");
  }
  const std::size_t horizon = demand.size();

  SimResult result;
  result.initial_stock = opts.initial_stock;
  result.ledger.reserve(horizon);

  // arrivals[t] = quantity due at period t; lead times are ceiled so a
  // fractional lead arrives at the next full period.
  std::vector<double> arrivals(horizon + 1, 0.0);
  double pending_beyond = 0.0;  // ordered but due past the horizon
  double stock = opts.initial_stock;
  double pipeline = 0.0;
  std::size_t fulfilled = 0;

  for (std::size_t t = 0; t < horizon; ++t) {
    const SupplyState& s = states[t];
    SimPeriod period;
    period.t = t;
    period.demand = demand[t];

    PolicyContext ctx;
    ctx.t = t;
    ctx.on_hand = stock;
    ctx.pipeline = pipeline;
    ctx.arriving_now = arrivals[t];
    ctx.history = std::span<const double>(demand.data(), t);
    ctx.state = &s;
    PeriodDecision d = policy(ctx);
    if (!(d.order_qty >= 0.0) || !std::isfinite(d.order_qty)) {
      throw NumericError("simulate: policy returned invalid order at period " +
                         std::to_string(t));
    }
    period.order_placed = d.order_qty;
    period.mode = d.mode;
    period.supplier = d.supplier;
    if (d.order_qty > 0.0) {
      ++result.orders_placed;
      const std::size_t lead = static_cast<std::size_t>(
          std::ceil(std::max(0.0, s.lead_actual)));
      const std::size_t due = t + lead;
      if (due < horizon) {
        arrivals[due] += d.order_qty;
      } else {
        pending_beyond += d.order_qty;
      }
      period.cost.production = s.c_prod * d.order_qty;
      period.cost.transport = s.c_trans[d.mode % 3] * d.order_qty;
      pipeline += d.order_qty;
    }

    period.arrivals = arrivals[t];
    stock += arrivals[t];
    pipeline -= arrivals[t];
    result.total_delivered += arrivals[t];
    period.stock_after_arrivals = stock;

    period.served = std::min(stock, demand[t]);
    period.unmet = demand[t] - period.served;
    stock -= period.served;
    result.total_served += period.served;
    period.end_stock = stock;

    period.cost.inventory = s.c_hold * stock;
    period.cost.shortage = s.c_short * period.unmet;
    period.cost.total = period.cost.production + period.cost.inventory +
                        period.cost.transport + period.cost.shortage;
    period.fulfilled = period.unmet == 0.0;
    if (period.fulfilled) ++fulfilled;

    result.metrics.inventory_cost += period.cost.inventory;
    result.metrics.total_cost += period.cost.total;
    result.ledger.push_back(period);
  }

  (void)pending_beyond;  // in transit past the horizon; never delivered
  result.end_stock = stock;
  result.metrics.service_level = 100.0 * double(fulfilled) / double(horizon);
  result.metrics.stockout_rate = 100.0 - result.metrics.service_level;
  return result;
}

SimResult simulate(const std::vector<PeriodDecision>& decisions,
                   const std::vector<double>& demand,
                   const std::vector<SupplyState>& states, const SimOptions& opts) {
  if (decisions.size() != demand.size()) {
    throw std::invalid_argument("simulate: " + std::to_string(decisions.size()) +
                                " decisions for " + std::to_string(demand.size()) +
                                " periods");
  }
  return simulate(
      [&decisions](const PolicyContext& ctx) { return decisions[ctx.t]; }, demand,
      states, opts);
}

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

PolicyFn make_eoq_policy(double q_star, double reorder_level) {
  return [q_star, reorder_level](const PolicyContext& ctx) {
    PeriodDecision d;
    if (ctx.on_hand + ctx.pipeline < reorder_level) {
      d.order_qty = q_star;
    }
    // Cheapest transport mode.
    d.mode = 0;
    for (std::size_t m = 1; m < 3; ++m) {
      if (ctx.state->c_trans[m] < ctx.state->c_trans[d.mode]) d.mode = m;
    }
    return d;
  };
}

PolicyFn make_reorder_point_policy(const ReorderPolicy& policy) {
  return [policy](const PolicyContext& ctx) {
    PeriodDecision d;
    d.order_qty = reorder_decision(std::max(0.0, ctx.on_hand + ctx.pipeline), policy);
    d.mode = 0;
    for (std::size_t m = 1; m < 3; ++m) {
      if (ctx.state->c_trans[m] < ctx.state->c_trans[d.mode]) d.mode = m;
    }
    return d;
  };
}

PolicyFn make_model_policy(const ModelPolicyInputs& inputs) {
  if (inputs.dataset == nullptr) {
    throw std::invalid_argument("make_model_policy: dataset required");
  }
  return [inputs](const PolicyContext& ctx) {
    const WindowedDataset& ds = *inputs.dataset;
    const std::size_t global_t = inputs.segment_start + ctx.t;
    const std::size_t window_len = ds.window_len;
    if (global_t < window_len) {
      throw std::invalid_argument("model policy: not enough history at period " +
                                  std::to_string(global_t));
    }

    // One-step forecast from the realized series (normalized units).
    double mu_n;
    if (inputs.forecaster != nullptr) {
      std::vector<double> window(window_len);
      for (std::size_t i = 0; i < window_len; ++i) {
        window[i] =
            ds.demand_scaler.transform(ds.series.demand[global_t - window_len + i]);
      }
      std::vector<int> contexts;
      if (!inputs.forecaster->config().vocab_sizes.empty()) {
        for (std::size_t fidx = 0; fidx < ds.vocabs.size(); ++fidx) {
          contexts.push_back(
              ds.vocabs[fidx].index_of(ds.series.context_labels[fidx][global_t - 1]));
        }
      }
      mu_n = inputs.forecaster->forward(window, contexts).mu;
    } else {
      mu_n = ds.demand_scaler.transform(ds.series.demand[global_t - 1]);
    }

    // The decision sees the simulated inventory position, not the recorded
    // stock trace.
    const double stock_view = ctx.on_hand + ctx.pipeline;
    SupplyState s_sim = *ctx.state;
    s_sim.stock = stock_view;

    const double span = ds.demand_scaler.span() > 0.0 ? ds.demand_scaler.span() : 1.0;
    PeriodDecision out;
    if (inputs.net != nullptr) {
      DecisionVector dec = inputs.net->forward(mu_n, s_sim);
      SupplyState s_n = s_sim;
      s_n.stock = ds.demand_scaler.transform(stock_view);
      RepairedDecision r = repair(dec, mu_n, s_n, inputs.catalog);
      out.order_qty = r.q_order * span;
      out.mode = r.mode;
      out.supplier = r.supplier;
    } else {
      const double mu_raw = ds.demand_scaler.inverse(mu_n);
      DecisionVector dec = cover_decision(mu_raw, s_sim,
                                          inputs.catalog.empty()
                                              ? 1
                                              : inputs.catalog.size());
      RepairedDecision r = repair(dec, mu_raw, s_sim, inputs.catalog);
      out.order_qty = r.q_order;
      out.mode = r.mode;
      out.supplier = r.supplier;
    }
    return out;
  };
}

}  // namespace dsopt
