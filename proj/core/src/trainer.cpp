#include "dsopt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace dsopt {

namespace {

// Independent deterministic streams so optional supply-side draws never
// perturb the forecaster trajectory.
struct RngStreams {
  std::mt19937_64 shuffle;
  std::mt19937_64 fdrop;
  std::mt19937_64 ddrop;
  std::mt19937_64 sample;

  explicit RngStreams(std::uint64_t seed)
      : shuffle(seed),
        fdrop(seed ^ 0x9E3779B97F4A7C15ull),
        ddrop(seed ^ 0xC2B2AE3D27D4EB4Full),
        sample(seed ^ 0x165667B19E3779F9ull) {}
};

std::vector<std::vector<double>> snapshot_params(const NamedParams& params) {
  std::vector<std::vector<double>> snap;
  snap.reserve(params.size());
  for (const auto& [name, t] : params) snap.push_back(t->values);
  return snap;
}

void restore_params(const NamedParams& params,
                    const std::vector<std::vector<double>>& snap) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i].second->values = snap[i];
}

struct ValMetrics {
  double mse_n = 0.0;     // normalized units
  double supply_n = 0.0;  // mean differentiable supply objective
  double mae = 0.0;
  double rmse = 0.0;
  double mape = 0.0;  // percent
  double sl = 0.0;
  double total_cost = 0.0;
};

// Eval-mode metrics over one split. With a decision net the operational
// numbers come from the repaired network decision; otherwise from the
// rule-based cover policy (the two-stage reading).
ValMetrics evaluate_split(const Forecaster& forecaster, const DecisionNet* net,
                          const WindowedDataset& ds, Split split,
                          const CostParams& cost, const SupplierCatalog& catalog) {
  ValMetrics m;
  std::size_t n = 0, mape_n = 0, fulfilled = 0;
  double se = 0.0, ae = 0.0, ape = 0.0, cost_acc = 0.0, supply_acc = 0.0;

  const double span = ds.demand_scaler.span();
  for (const auto& s : ds.samples) {
    if (s.split != split) continue;
    ++n;
    ForecastDistribution d = forecaster.forward(s.window, s.contexts);
    const double err_n = d.mu - s.target;
    se += err_n * err_n;

    const double y_raw = ds.demand_scaler.inverse(s.target);
    const double mu_raw = ds.demand_scaler.inverse(d.mu);
    ae += std::abs(mu_raw - y_raw);
    if (y_raw != 0.0) {
      ape += std::abs(mu_raw - y_raw) / std::abs(y_raw);
      ++mape_n;
    }

    double q_raw = 0.0;
    std::size_t mode = 0;
    if (net != nullptr) {
      const double stock_n = ds.demand_scaler.transform(s.state.stock);
      {
        ad::Tape tape;
        ad::TapeScope scope(tape);
        supply_acc += supply_loss_nodes(*net, ad::Tensor::scalar(d.mu), s.state,
                                        stock_n, s.target, cost, catalog, nullptr)
                          .loss.item();
      }
      DecisionVector dec = net->forward(d.mu, s.state);
      SupplyState s_n = s.state;
      s_n.stock = stock_n;
      RepairedDecision r = repair(dec, d.mu, s_n, catalog);
      q_raw = r.q_order * (span > 0.0 ? span : 1.0);
      mode = r.mode;
    } else {
      DecisionVector dec = cover_decision(mu_raw, s.state,
                                          catalog.empty() ? 1 : catalog.size());
      RepairedDecision r = repair(dec, mu_raw, s.state, catalog);
      q_raw = r.q_order;
      mode = r.mode;
    }

    DecisionVector dec_raw;
    dec_raw.q_order = q_raw;
    dec_raw.mode_scores = {0.0, 0.0, 0.0};
    dec_raw.mode_scores[mode] = 1.0;
    CostBreakdown c = total_cost(dec_raw, s.state, y_raw);
    cost_acc += c.total;
    if (s.state.stock + q_raw >= y_raw) ++fulfilled;
  }

  if (n == 0) return m;
  m.mse_n = se / double(n);
  m.supply_n = supply_acc / double(n);
  m.mae = ae / double(n);
  // Raw errors are span * normalized errors (a degenerate scaler passes through).
  const double span_eff = span > 0.0 ? span : 1.0;
  m.rmse = std::sqrt(se / double(n)) * span_eff;
  m.mape = mape_n > 0 ? 100.0 * ape / double(mape_n) : 0.0;
  m.sl = double(fulfilled) / double(n);
  m.total_cost = cost_acc / double(n);
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config and optimizer
// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (lambda1 < 0.0 || lambda2 < 0.0) {
    throw std::invalid_argument("TrainConfig: lambda weights must be >= 0");
  }
  if (learning_rate <= 0.0) {
    throw std::invalid_argument("TrainConfig: learning rate must be > 0");
  }
  if (batch_size == 0 || max_epochs == 0) {
    throw std::invalid_argument("TrainConfig: batch size and epochs must be >= 1");
  }
  if (patience == 0) {
    throw std::invalid_argument("TrainConfig: patience must be >= 1");
  }
  if (clip_norm < 0.0) {
    throw std::invalid_argument("TrainConfig: clip_norm must be >= 0");
  }
}

AdamOptimizer::AdamOptimizer(const NamedParams& params, const TrainConfig& cfg)
    : lr_(cfg.learning_rate),
      beta1_(cfg.beta1),
      beta2_(cfg.beta2),
      eps_(cfg.adam_eps),
      clip_(cfg.clip_norm) {
  for (const auto& [name, t] : params) {
    m_.emplace_back(t->numel(), 0.0);
    v_.emplace_back(t->numel(), 0.0);
  }
}

void AdamOptimizer::step(const NamedParams& params,
                         const std::vector<std::vector<double>>& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw std::invalid_argument("adam: parameter list changed size");
  }
  double norm_sq = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].size() != params[i].second->numel()) {
      throw std::invalid_argument("adam: gradient shape mismatch for '" +
                                  params[i].first + "'");
    }
    for (double g : grads[i]) {
      if (!std::isfinite(g)) {
        throw NumericError("adam: non-finite gradient for parameter '" +
                           params[i].first + "'");
      }
      norm_sq += g * g;
    }
  }
  double factor = 1.0;
  if (clip_ > 0.0) {
    const double norm = std::sqrt(norm_sq);
    if (norm > clip_) factor = clip_ / norm;
  }

  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, double(t_));
  const double bc2 = 1.0 - std::pow(beta2_, double(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& vals = params[i].second->values;
    for (std::size_t j = 0; j < vals.size(); ++j) {
      const double g = grads[i][j] * factor;
      m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g;
      v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g * g;
      const double m_hat = m_[i][j] / bc1;
      const double v_hat = v_[i][j] / bc2;
      vals[j] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
}

// ---------------------------------------------------------------------------
// History
// ---------------------------------------------------------------------------

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,train_loss,val_loss,val_mae,val_rmse,val_mape,val_sl,val_total_cost\n";
  char buf[256];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf,
                  "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch,
                  r.train_loss, r.val_loss, r.val_mae, r.val_rmse, r.val_mape,
                  r.val_sl, r.val_total_cost);
    out << buf;
  }
}

// ---------------------------------------------------------------------------
// Loss assembly
// ---------------------------------------------------------------------------

double compute_cost_scale(const WindowedDataset& ds) {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& s : ds.samples) {
    if (s.split != Split::train || s.augmented) continue;
    const double naive = s.window.back();
    SupplyState s_n = s.state;
    s_n.stock = ds.demand_scaler.transform(s.state.stock);
    DecisionVector dec = cover_decision(naive, s_n);
    acc += total_cost(dec, s_n, s.target).total;
    ++n;
  }
  const double scale = n > 0 ? acc / double(n) : 0.0;
  return scale > 0.0 ? scale : 1.0;
}

BatchLossParts batch_loss_nodes(const Forecaster& forecaster, const DecisionNet& net,
                                const WindowedDataset& ds,
                                const std::vector<std::size_t>& sample_indices,
                                const CostParams& cost, const SupplierCatalog& catalog,
                                const TrainConfig& cfg,
                                std::mt19937_64* forecaster_dropout_rng,
                                std::mt19937_64* decision_dropout_rng,
                                std::mt19937_64* sample_rng) {
  if (sample_indices.empty()) {
    throw std::invalid_argument("batch_loss_nodes: empty batch");
  }
  std::vector<ad::Tensor> mus;
  std::vector<double> targets;
  std::vector<ad::Tensor> supply_losses;
  mus.reserve(sample_indices.size());
  supply_losses.reserve(sample_indices.size());

  for (std::size_t idx : sample_indices) {
    const Sample& s = ds.samples[idx];
    auto out = forecaster.forward_nodes(s.window, s.contexts, forecaster_dropout_rng);
    mus.push_back(out.mu);
    targets.push_back(s.target);

    ad::Tensor yhat = out.mu;
    if (cfg.stochastic && out.stochastic && sample_rng != nullptr) {
      std::normal_distribution<double> z(0.0, 1.0);
      yhat = ad::add(out.mu, ad::scale(out.sigma, z(*sample_rng)));
    }
    if (cfg.detach_forecast) {
      yhat = ad::Tensor::scalar(yhat.values[0]);  // constant copy, no gradient path
    }
    const double stock_n = ds.demand_scaler.transform(s.state.stock);
    supply_losses.push_back(supply_loss_nodes(net, yhat, s.state, stock_n, s.target,
                                              cost, catalog, decision_dropout_rng)
                                .loss);
  }

  BatchLossParts parts;
  parts.forecast = forecast_loss_nodes(mus, targets);
  parts.supply = supply_losses.size() == 1 ? supply_losses.front()
                                           : ad::mean(ad::concat(supply_losses));
  parts.total = total_loss_nodes(parts.forecast, parts.supply, cfg.lambda1,
                                 cfg.lambda2);
  return parts;
}

ad::Tensor total_loss_nodes(const ad::Tensor& forecast_loss,
                            const ad::Tensor& supply_loss, double lambda1,
                            double lambda2) {
  if (!forecast_loss.finite() || !supply_loss.finite()) {
    throw NumericError("total_loss: non-finite loss component");
  }
  return ad::add(ad::scale(ad::as_scalar(forecast_loss), lambda1),
                 ad::scale(ad::as_scalar(supply_loss), lambda2));
}

// ---------------------------------------------------------------------------
// Training loops
// ---------------------------------------------------------------------------

namespace {

std::vector<std::vector<std::size_t>> make_batches(std::vector<std::size_t>& indices,
                                                   std::size_t batch_size,
                                                   std::mt19937_64& shuffle_rng) {
  std::shuffle(indices.begin(), indices.end(), shuffle_rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < indices.size(); i += batch_size) {
    const std::size_t end = std::min(indices.size(), i + batch_size);
    batches.emplace_back(indices.begin() + std::ptrdiff_t(i),
                         indices.begin() + std::ptrdiff_t(end));
  }
  return batches;
}

struct EarlyStopper {
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  std::size_t since_improved = 0;

  // Returns true when the run should stop.
  bool observe(double val_loss, std::size_t epoch, std::size_t patience) {
    if (val_loss < best) {
      best = val_loss;
      best_epoch = epoch;
      since_improved = 0;
      return false;
    }
    ++since_improved;
    return since_improved >= patience;
  }
};

}  // namespace

TrainResult pretrain_forecaster(Forecaster& forecaster, const WindowedDataset& ds,
                                const TrainConfig& cfg) {
  cfg.validate();
  auto train_idx = ds.indices_of(Split::train);
  if (train_idx.empty()) {
    throw std::invalid_argument("pretrain_forecaster: empty training split");
  }

  RngStreams rngs(cfg.seed);
  NamedParams params = forecaster.params();
  AdamOptimizer adam(params, cfg);
  EarlyStopper stop;
  std::vector<std::vector<double>> best_snapshot = snapshot_params(params);

  TrainResult result;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    auto batches = make_batches(train_idx, cfg.batch_size, rngs.shuffle);
    double loss_acc = 0.0;
    std::size_t seen = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      ad::Tape tape;
      ad::TapeScope scope(tape);
      for (auto& [name, t] : params) tape.watch(*t);

      std::vector<ad::Tensor> mus;
      std::vector<double> targets;
      for (std::size_t idx : batches[b]) {
        const Sample& s = ds.samples[idx];
        mus.push_back(forecaster.forward_nodes(s.window, s.contexts, &rngs.fdrop).mu);
        targets.push_back(s.target);
      }
      ad::Tensor loss = forecast_loss_nodes(mus, targets);
      const double loss_value = loss.item();
      if (!std::isfinite(loss_value)) {
        throw NumericError("pretrain_forecaster: non-finite loss at epoch " +
                           std::to_string(epoch) + " batch " + std::to_string(b));
      }
      loss_acc += loss_value * double(batches[b].size());
      seen += batches[b].size();

      ad::Gradients grads = tape.backward(loss);
      std::vector<std::vector<double>> g;
      g.reserve(params.size());
      for (auto& [name, t] : params) g.push_back(grads.at(*t).values);
      adam.step(params, g);
    }

    ValMetrics vm = evaluate_split(forecaster, nullptr, ds, Split::val, CostParams{}, {});
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_acc / double(seen);
    rec.val_loss = vm.mse_n;
    rec.val_mae = vm.mae;
    rec.val_rmse = vm.rmse;
    rec.val_mape = vm.mape;
    rec.val_sl = vm.sl;
    rec.val_total_cost = vm.total_cost;
    result.history.push_back(rec);
    result.epochs_run = epoch;

    const bool improved = rec.val_loss < stop.best;
    const bool should_stop = stop.observe(rec.val_loss, epoch, cfg.patience);
    if (improved) best_snapshot = snapshot_params(params);
    if (should_stop) {
      result.stopped_early = true;
      break;
    }
  }

  restore_params(params, best_snapshot);
  result.best_epoch = stop.best_epoch;
  result.best_val_loss = stop.best;
  return result;
}

TrainResult train_joint(Forecaster& forecaster, DecisionNet& net,
                        const WindowedDataset& ds, const CostParams& cost,
                        const SupplierCatalog& catalog, const TrainConfig& cfg) {
  cfg.validate();
  cost.validate();
  auto train_idx = ds.indices_of(Split::train);
  if (train_idx.empty()) {
    throw std::invalid_argument("train_joint: empty training split");
  }

  RngStreams rngs(cfg.seed);
  NamedParams theta = forecaster.params();
  NamedParams all = theta;
  for (auto& p : net.params()) all.push_back(p);
  AdamOptimizer adam(all, cfg);
  EarlyStopper stop;
  std::vector<std::vector<double>> best_snapshot = snapshot_params(all);

  TrainResult result;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    auto batches = make_batches(train_idx, cfg.batch_size, rngs.shuffle);
    double loss_acc = 0.0;
    std::size_t seen = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      ad::Tape tape;
      ad::TapeScope scope(tape);
      for (auto& [name, t] : all) tape.watch(*t);

      BatchLossParts parts = batch_loss_nodes(forecaster, net, ds, batches[b], cost,
                                              catalog, cfg, &rngs.fdrop, &rngs.ddrop,
                                              &rngs.sample);
      const double loss_value = parts.total.item();
      if (!std::isfinite(loss_value)) {
        throw NumericError("train_joint: non-finite loss at epoch " +
                           std::to_string(epoch) + " batch " + std::to_string(b));
      }
      loss_acc += loss_value * double(batches[b].size());
      seen += batches[b].size();

      ad::Gradients grads = tape.backward(parts.total);
      std::vector<std::vector<double>> g;
      g.reserve(all.size());
      for (auto& [name, t] : all) g.push_back(grads.at(*t).values);
      adam.step(all, g);
    }

    // With lambda2 = 0 the decision net receives no training signal, so the
    // operational history columns come from the rule-based cover policy (the
    // decoupled two-stage reading).
    const DecisionNet* eval_net = cfg.lambda2 == 0.0 ? nullptr : &net;
    ValMetrics vm = evaluate_split(forecaster, eval_net, ds, Split::val, cost, catalog);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_acc / double(seen);
    rec.val_loss = cfg.lambda1 * vm.mse_n + cfg.lambda2 * vm.supply_n;
    rec.val_mae = vm.mae;
    rec.val_rmse = vm.rmse;
    rec.val_mape = vm.mape;
    rec.val_sl = vm.sl;
    rec.val_total_cost = vm.total_cost;
    result.history.push_back(rec);
    result.epochs_run = epoch;

    const bool improved = rec.val_loss < stop.best;
    const bool should_stop = stop.observe(rec.val_loss, epoch, cfg.patience);
    if (improved) best_snapshot = snapshot_params(all);
    if (should_stop) {
      result.stopped_early = true;
      break;
    }
  }

  restore_params(all, best_snapshot);
  result.best_epoch = stop.best_epoch;
  result.best_val_loss = stop.best;
  return result;
}

TrainResult train_decision_only(DecisionNet& net, const WindowedDataset& ds,
                                const CostParams& cost, const SupplierCatalog& catalog,
                                const TrainConfig& cfg,
                                const std::function<double(const Sample&)>& forecast_fn) {
  cfg.validate();
  cost.validate();
  auto train_idx = ds.indices_of(Split::train);
  if (train_idx.empty()) {
    throw std::invalid_argument("train_decision_only: empty training split");
  }

  RngStreams rngs(cfg.seed);
  NamedParams phi = net.params();
  AdamOptimizer adam(phi, cfg);
  EarlyStopper stop;
  std::vector<std::vector<double>> best_snapshot = snapshot_params(phi);

  auto split_supply_loss = [&](Split split) {
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto& s : ds.samples) {
      if (s.split != split) continue;
      ad::Tape tape;
      ad::TapeScope scope(tape);
      const double stock_n = ds.demand_scaler.transform(s.state.stock);
      acc += supply_loss_nodes(net, ad::Tensor::scalar(forecast_fn(s)), s.state,
                               stock_n, s.target, cost, catalog, nullptr)
                 .loss.item();
      ++n;
    }
    return n > 0 ? acc / double(n) : 0.0;
  };

  TrainResult result;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    auto batches = make_batches(train_idx, cfg.batch_size, rngs.shuffle);
    double loss_acc = 0.0;
    std::size_t seen = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      ad::Tape tape;
      ad::TapeScope scope(tape);
      for (auto& [name, t] : phi) tape.watch(*t);
      std::vector<ad::Tensor> losses;
      for (std::size_t idx : batches[b]) {
        const Sample& s = ds.samples[idx];
        const double stock_n = ds.demand_scaler.transform(s.state.stock);
        losses.push_back(supply_loss_nodes(net, ad::Tensor::scalar(forecast_fn(s)),
                                           s.state, stock_n, s.target, cost, catalog,
                                           &rngs.ddrop)
                             .loss);
      }
      ad::Tensor loss =
          losses.size() == 1 ? losses.front() : ad::mean(ad::concat(losses));
      const double loss_value = loss.item();
      if (!std::isfinite(loss_value)) {
        throw NumericError("train_decision_only: non-finite loss at epoch " +
                           std::to_string(epoch) + " batch " + std::to_string(b));
      }
      loss_acc += loss_value * double(batches[b].size());
      seen += batches[b].size();

      ad::Gradients grads = tape.backward(loss);
      std::vector<std::vector<double>> g;
      for (auto& [name, t] : phi) g.push_back(grads.at(*t).values);
      adam.step(phi, g);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_acc / double(seen);
    rec.val_loss = split_supply_loss(Split::val);
    result.history.push_back(rec);
    result.epochs_run = epoch;

    const bool improved = rec.val_loss < stop.best;
    const bool should_stop = stop.observe(rec.val_loss, epoch, cfg.patience);
    if (improved) best_snapshot = snapshot_params(phi);
    if (should_stop) {
      result.stopped_early = true;
      break;
    }
  }

  restore_params(phi, best_snapshot);
  result.best_epoch = stop.best_epoch;
  result.best_val_loss = stop.best;
  return result;
}

// ---------------------------------------------------------------------------
// Lambda grid search
// ---------------------------------------------------------------------------

std::vector<std::pair<double, double>> default_lambda_grid() {
  std::vector<std::pair<double, double>> grid;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      grid.emplace_back(0.5 + 0.1 * i, 0.1 + 0.1 * j);
    }
  }
  return grid;
}

GridSearchResult grid_search_lambdas(const ModelFactory& make_models,
                                     const WindowedDataset& ds, const CostParams& cost,
                                     const SupplierCatalog& catalog,
                                     const std::vector<std::pair<double, double>>& grid,
                                     const TrainConfig& base_cfg) {
  if (grid.empty()) {
    throw std::invalid_argument("grid_search_lambdas: empty grid");
  }
  GridSearchResult result;
  for (const auto& [l1, l2] : grid) {
    auto [forecaster, net] = make_models();
    TrainConfig cfg = base_cfg;
    cfg.lambda1 = l1;
    cfg.lambda2 = l2;
    TrainResult run = train_joint(*forecaster, *net, ds, cost, catalog, cfg);
    GridCell cell;
    cell.lambda1 = l1;
    cell.lambda2 = l2;
    cell.best_val_loss = run.best_val_loss;
    cell.best_epoch = run.best_epoch;
    result.table.push_back(cell);
  }
  result.best_index = 0;
  for (std::size_t i = 1; i < result.table.size(); ++i) {
    const GridCell& cand = result.table[i];
    const GridCell& best = result.table[result.best_index];
    const bool better = cand.best_val_loss < best.best_val_loss ||
                        (cand.best_val_loss == best.best_val_loss &&
                         cand.lambda2 < best.lambda2);
    if (better) result.best_index = i;
  }
  return result;
}

}  // namespace dsopt
