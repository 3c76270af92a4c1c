#include "dsopt/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace dsopt {

namespace {

constexpr std::uint64_t kNetSeedSalt = 0x51f15eedULL;
constexpr std::uint64_t kAugmentSeedSalt = 0xA5A5A5A5ULL;

struct PreparedRun {
  WindowedDataset dataset;
  ForecasterConfig forecaster_cfg;
  DecisionNetConfig decision_cfg;
  TrainConfig train_cfg;
  CostParams cost;
  std::size_t segment_start = 0;
};

PreparedRun prepare(const SeriesBundle& bundle, const ExperimentSettings& settings,
                    Variant variant, std::uint64_t seed) {
  PreparedRun run;
  PipelineOptions opt = settings.pipeline;
  if (variant == Variant::no_augmentation) opt.augment = false;
  opt.augment_cfg.seed = seed ^ kAugmentSeedSalt;
  run.dataset = assemble_dataset(bundle, opt);

  run.forecaster_cfg = settings.forecaster;
  run.forecaster_cfg.window_len = opt.window_len;
  run.forecaster_cfg.vocab_sizes.clear();
  if (variant != Variant::no_embeddings) {
    for (const auto& vocab : run.dataset.vocabs) {
      run.forecaster_cfg.vocab_sizes.push_back(vocab.size());
    }
  }

  run.decision_cfg = settings.decision;
  run.decision_cfg.supplier_count =
      settings.catalog.empty() ? 1 : settings.catalog.size();

  run.train_cfg = settings.train;
  run.train_cfg.seed = seed;

  run.cost = settings.cost;
  if (run.cost.cost_scale <= 0.0) run.cost.cost_scale = compute_cost_scale(run.dataset);

  run.segment_start = run.dataset.split.spec.val_end;
  return run;
}

ForecastMetrics test_forecast_metrics(const Forecaster& f, const WindowedDataset& ds) {
  std::vector<double> actuals, preds;
  for (const auto& s : ds.samples) {
    if (s.split != Split::test) continue;
    actuals.push_back(ds.demand_scaler.inverse(s.target));
    preds.push_back(ds.demand_scaler.inverse(f.forward(s.window, s.contexts).mu));
  }
  if (actuals.empty()) {
    throw DataError("run_experiment: empty test split, cannot score forecasts");
  }
  return forecast_metrics(actuals, preds);
}

SimResult simulate_segment(const PolicyFn& policy, const SeriesBundle& bundle,
                           std::size_t segment_start, double initial_stock) {
  if (segment_start >= bundle.demand.size()) {
    throw DataError("run_experiment: empty test segment");
  }
  std::vector<double> demand(bundle.demand.begin() +
                                 std::ptrdiff_t(segment_start),
                             bundle.demand.end());
  std::vector<SupplyState> states(bundle.states.begin() +
                                      std::ptrdiff_t(segment_start),
                                  bundle.states.end());
  SimOptions opts;
  opts.initial_stock =
      initial_stock < 0.0 ? bundle.states[segment_start].stock : initial_stock;
  return simulate(policy, demand, states, opts);
}

// Mean demand and std over the training time range, raw units.
std::pair<double, double> train_demand_stats(const WindowedDataset& ds) {
  const std::size_t n = std::max<std::size_t>(ds.split.spec.train_end, 1);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += ds.series.demand[i];
  mean /= double(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    var += (ds.series.demand[i] - mean) * (ds.series.demand[i] - mean);
  }
  var = n > 1 ? var / double(n - 1) : 0.0;
  return {mean, std::sqrt(var)};
}

}  // namespace

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::full_hybrid: return "full_hybrid";
    case Variant::no_embeddings: return "no_embeddings";
    case Variant::no_augmentation: return "no_augmentation";
    case Variant::forecast_only: return "forecast_only";
    case Variant::supply_only: return "supply_only";
  }
  return "?";
}

Variant variant_from_name(const std::string& name) {
  if (name == "full_hybrid" || name == "full") return Variant::full_hybrid;
  if (name == "no_embeddings") return Variant::no_embeddings;
  if (name == "no_augmentation") return Variant::no_augmentation;
  if (name == "forecast_only") return Variant::forecast_only;
  if (name == "supply_only") return Variant::supply_only;
  throw ConfigError("unknown ablation toggle '" + name + "'");
}

void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(workers, 1);
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::mutex mu;
  std::exception_ptr first_error;
  std::size_t next = 0;
  auto worker = [&]() {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= n || first_error) return;
        i = next++;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

RunOutcome run_experiment(const SeriesBundle& bundle,
                          const ExperimentSettings& settings, Variant variant,
                          std::uint64_t seed) {
  PreparedRun run = prepare(bundle, settings, variant, seed);
  RunOutcome out;
  out.cost_scale = run.cost.cost_scale;
  out.segment_start = run.segment_start;

  ModelPolicyInputs policy_inputs;
  policy_inputs.dataset = &run.dataset;
  policy_inputs.segment_start = run.segment_start;
  policy_inputs.catalog = settings.catalog;

  if (variant == Variant::supply_only) {
    DecisionNet net(run.decision_cfg, seed ^ kNetSeedSalt);
    net.state_scaler() = run.dataset.state_scaler;
    out.phase2 = train_decision_only(
        net, run.dataset, run.cost, settings.catalog, run.train_cfg,
        [](const Sample& s) { return s.window.back(); });
    out.has_forecast_metrics = false;
    policy_inputs.net = &net;
    out.sim = simulate_segment(make_model_policy(policy_inputs), bundle,
                               run.segment_start, settings.initial_stock);
    out.ops = out.sim.metrics;
    return out;
  }

  Forecaster forecaster(run.forecaster_cfg, seed);
  if (settings.two_phase || variant == Variant::forecast_only) {
    out.phase1 = pretrain_forecaster(forecaster, run.dataset, run.train_cfg);
  }

  if (variant == Variant::forecast_only) {
    out.forecast = test_forecast_metrics(forecaster, run.dataset);
    policy_inputs.forecaster = &forecaster;
    out.sim = simulate_segment(make_model_policy(policy_inputs), bundle,
                               run.segment_start, settings.initial_stock);
    out.ops = out.sim.metrics;
    return out;
  }

  DecisionNet net(run.decision_cfg, seed ^ kNetSeedSalt);
  net.state_scaler() = run.dataset.state_scaler;
  out.phase2 = train_joint(forecaster, net, run.dataset, run.cost, settings.catalog,
                           run.train_cfg);
  out.forecast = test_forecast_metrics(forecaster, run.dataset);
  policy_inputs.forecaster = &forecaster;
  policy_inputs.net = &net;
  out.sim = simulate_segment(make_model_policy(policy_inputs), bundle,
                             run.segment_start, settings.initial_stock);
  out.ops = out.sim.metrics;
  return out;
}

// ---------------------------------------------------------------------------
// Ablation
// ---------------------------------------------------------------------------

namespace {

ForecastMetrics mean_forecast(const std::vector<RunOutcome>& runs) {
  ForecastMetrics m;
  std::size_t n = 0;
  for (const auto& r : runs) {
    if (!r.has_forecast_metrics) continue;
    m.mae += r.forecast.mae;
    m.rmse += r.forecast.rmse;
    m.mape += r.forecast.mape;
    m.smape += r.forecast.smape;
    ++n;
  }
  if (n > 0) {
    m.mae /= double(n);
    m.rmse /= double(n);
    m.mape /= double(n);
    m.smape /= double(n);
  }
  return m;
}

OpsMetrics mean_ops(const std::vector<RunOutcome>& runs) {
  OpsMetrics m;
  for (const auto& r : runs) {
    m.inventory_cost += r.ops.inventory_cost;
    m.stockout_rate += r.ops.stockout_rate;
    m.service_level += r.ops.service_level;
    m.total_cost += r.ops.total_cost;
  }
  const double n = double(runs.size());
  m.inventory_cost /= n;
  m.stockout_rate /= n;
  m.service_level /= n;
  m.total_cost /= n;
  return m;
}

std::vector<RunOutcome> run_replicates(const SeriesBundle& bundle,
                                       const ExperimentSettings& settings,
                                       Variant variant,
                                       const std::vector<std::uint64_t>& seeds,
                                       std::size_t workers) {
  std::vector<RunOutcome> runs(seeds.size());
  parallel_for(seeds.size(), workers, [&](std::size_t i) {
    runs[i] = run_experiment(bundle, settings, variant, seeds[i]);
  });
  return runs;
}

}  // namespace

std::vector<AblationRow> ablation_run(const SeriesBundle& bundle,
                                      const ExperimentSettings& settings,
                                      const std::vector<Variant>& toggles,
                                      const std::vector<std::uint64_t>& seeds,
                                      std::size_t workers) {
  if (seeds.empty()) throw std::invalid_argument("ablation_run: no seeds");
  std::vector<Variant> order{Variant::full_hybrid};
  for (Variant v : toggles) {
    if (v == Variant::full_hybrid) continue;
    if (std::find(order.begin(), order.end(), v) == order.end()) order.push_back(v);
  }

  std::vector<AblationRow> rows;
  for (Variant v : order) {
    auto runs = run_replicates(bundle, settings, v, seeds, workers);
    AblationRow row;
    row.configuration = variant_name(v);
    row.has_forecast = v != Variant::supply_only;
    row.forecast = mean_forecast(runs);
    row.ops = mean_ops(runs);
    row.seed_count = seeds.size();
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Sensitivity sweep
// ---------------------------------------------------------------------------

std::vector<SweepCell> sensitivity_sweep(const SeriesBundle& bundle,
                                         const ExperimentSettings& settings,
                                         const std::vector<SweepAxis>& grid,
                                         const std::vector<std::uint64_t>& seeds,
                                         std::size_t workers) {
  if (grid.empty()) throw std::invalid_argument("sensitivity_sweep: empty grid");
  if (seeds.empty()) throw std::invalid_argument("sensitivity_sweep: no seeds");

  struct Job {
    std::string parameter;
    double value;
    ExperimentSettings settings;
  };
  std::vector<Job> jobs;
  for (const auto& axis : grid) {
    for (double value : axis.values) {
      const bool dup = std::any_of(jobs.begin(), jobs.end(), [&](const Job& j) {
        return j.parameter == axis.parameter && j.value == value;
      });
      if (dup) continue;
      Job job{axis.parameter, value, settings};
      if (axis.parameter == "learning_rate") {
        job.settings.train.learning_rate = value;
      } else if (axis.parameter == "batch_size") {
        job.settings.train.batch_size = std::size_t(value);
      } else if (axis.parameter == "embed_dim") {
        job.settings.forecaster.embed_dim = std::size_t(value);
      } else {
        throw ConfigError("sensitivity_sweep: unknown parameter '" + axis.parameter +
                          "'");
      }
      jobs.push_back(std::move(job));
    }
  }

  std::vector<SweepCell> cells(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    auto runs =
        run_replicates(bundle, jobs[i].settings, Variant::full_hybrid, seeds, 1);
    SweepCell cell;
    cell.parameter = jobs[i].parameter;
    cell.value = jobs[i].value;
    cell.mae = mean_forecast(runs).mae;
    OpsMetrics ops = mean_ops(runs);
    cell.total_cost = ops.total_cost;
    cell.service_level = ops.service_level;
    cell.seed_count = seeds.size();
    cells[i] = std::move(cell);
  });
  return cells;
}

// ---------------------------------------------------------------------------
// Model comparison
// ---------------------------------------------------------------------------

namespace {

struct SeedScores {
  ForecastMetrics forecast;
  OpsMetrics ops;
  bool has_forecast = true;
};

// Forecast + cover-rule policy for a classical one-step forecaster.
template <typename ForecastFn>
SeedScores classical_policy_scores(const WindowedDataset& ds,
                                   const SeriesBundle& bundle,
                                   std::size_t segment_start, double initial_stock,
                                   const SupplierCatalog& catalog,
                                   ForecastFn&& forecast_fn) {
  std::vector<double> actuals, preds;
  for (const auto& s : ds.samples) {
    if (s.split != Split::test) continue;
    const std::size_t end = s.window_start + ds.window_len;  // target time index
    std::vector<double> history(bundle.demand.begin(),
                                bundle.demand.begin() + std::ptrdiff_t(end));
    actuals.push_back(bundle.demand[end]);
    preds.push_back(forecast_fn(history));
  }
  SeedScores out;
  out.forecast = forecast_metrics(actuals, preds);

  PolicyFn policy = [&](const PolicyContext& ctx) {
    const std::size_t global_t = segment_start + ctx.t;
    std::vector<double> history(bundle.demand.begin(),
                                bundle.demand.begin() + std::ptrdiff_t(global_t));
    const double yhat = forecast_fn(history);
    SupplyState s_sim = *ctx.state;
    s_sim.stock = ctx.on_hand + ctx.pipeline;
    DecisionVector dec =
        cover_decision(yhat, s_sim, catalog.empty() ? 1 : catalog.size());
    RepairedDecision r = repair(dec, yhat, s_sim, catalog);
    PeriodDecision d;
    d.order_qty = r.q_order;
    d.mode = r.mode;
    d.supplier = r.supplier;
    return d;
  };
  std::vector<double> demand(bundle.demand.begin() + std::ptrdiff_t(segment_start),
                             bundle.demand.end());
  std::vector<SupplyState> states(bundle.states.begin() + std::ptrdiff_t(segment_start),
                                  bundle.states.end());
  SimOptions opts;
  opts.initial_stock =
      initial_stock < 0.0 ? bundle.states[segment_start].stock : initial_stock;
  out.ops = simulate(policy, demand, states, opts).metrics;
  return out;
}

}  // namespace

ComparisonResult compare_models(const SeriesBundle& bundle,
                                const ExperimentSettings& settings,
                                const std::vector<std::string>& baselines,
                                const std::vector<std::uint64_t>& seeds,
                                std::size_t workers) {
  if (seeds.empty()) throw std::invalid_argument("compare_models: no seeds");

  struct ModelScores {
    std::string name;
    bool has_forecast = true;
    std::vector<SeedScores> per_seed;
  };
  std::vector<ModelScores> models;
  models.push_back({"hybrid", true, {}});
  for (const auto& name : baselines) models.push_back({name, true, {}});
  for (auto& m : models) m.per_seed.resize(seeds.size());

  // One dataset per seed covers every classical baseline; the learned models
  // train inside run_experiment.
  parallel_for(seeds.size(), workers, [&](std::size_t si) {
    const std::uint64_t seed = seeds[si];
    PipelineOptions opt = settings.pipeline;
    opt.augment_cfg.seed = seed ^ kAugmentSeedSalt;
    WindowedDataset ds = assemble_dataset(bundle, opt);
    const std::size_t segment_start = ds.split.spec.val_end;
    auto [mean_demand, std_demand] = train_demand_stats(ds);

    for (auto& model : models) {
      SeedScores& slot = model.per_seed[si];
      if (model.name == "hybrid") {
        RunOutcome r = run_experiment(bundle, settings, Variant::full_hybrid, seed);
        slot.forecast = r.forecast;
        slot.ops = r.ops;
      } else if (model.name == "two_stage") {
        RunOutcome r = run_experiment(bundle, settings, Variant::forecast_only, seed);
        slot.forecast = r.forecast;
        slot.ops = r.ops;
      } else if (model.name == "gru_policy") {
        ExperimentSettings gru = settings;
        gru.forecaster.cell = CellKind::gru;
        RunOutcome r = run_experiment(bundle, gru, Variant::forecast_only, seed);
        slot.forecast = r.forecast;
        slot.ops = r.ops;
      } else if (model.name == "naive") {
        slot = classical_policy_scores(
            ds, bundle, segment_start, settings.initial_stock, settings.catalog,
            [](const std::vector<double>& h) { return naive_forecast(h); });
      } else if (model.name == "seasonal_naive") {
        const std::size_t period = settings.seasonal_period;
        slot = classical_policy_scores(
            ds, bundle, segment_start, settings.initial_stock, settings.catalog,
            [period](const std::vector<double>& h) {
              return seasonal_naive_forecast(h, period);
            });
      } else if (model.name == "linear_ar") {
        std::vector<double> train(
            bundle.demand.begin(),
            bundle.demand.begin() + std::ptrdiff_t(ds.split.spec.train_end));
        ArModel ar = linear_ar_fit(train, settings.ar_order);
        slot = classical_policy_scores(
            ds, bundle, segment_start, settings.initial_stock, settings.catalog,
            [ar](const std::vector<double>& h) { return linear_ar_forecast(h, ar); });
      } else if (model.name == "eoq") {
        const std::size_t horizon = bundle.demand.size() - segment_start;
        double mean_hold = 0.0;
        for (std::size_t i = segment_start; i < bundle.states.size(); ++i) {
          mean_hold += bundle.states[i].c_hold;
        }
        mean_hold /= double(horizon);
        EoqParams p;
        p.demand = mean_demand * double(horizon);
        p.order_cost = settings.eoq_order_cost;
        p.holding_cost = std::max(mean_hold, 1e-9) * double(horizon);
        const double q_star = eoq_quantity(p);
        model.has_forecast = false;
        std::vector<double> demand(bundle.demand.begin() + std::ptrdiff_t(segment_start),
                                   bundle.demand.end());
        std::vector<SupplyState> states(
            bundle.states.begin() + std::ptrdiff_t(segment_start),
            bundle.states.end());
        SimOptions opts;
        opts.initial_stock = settings.initial_stock < 0.0
                                 ? bundle.states[segment_start].stock
                                 : settings.initial_stock;
        slot.ops =
            simulate(make_eoq_policy(q_star, mean_demand), demand, states, opts)
                .metrics;
        slot.has_forecast = false;
      } else if (model.name == "reorder") {
        double mean_lead = 0.0;
        for (std::size_t i = 0; i < ds.split.spec.train_end; ++i) {
          mean_lead += bundle.states[i].lead_actual;
        }
        mean_lead /= double(std::max<std::size_t>(ds.split.spec.train_end, 1));
        ReorderPolicy rp = make_reorder_policy(mean_demand, std_demand, mean_lead,
                                               std::max(mean_demand, 1.0) * 4.0);
        model.has_forecast = false;
        std::vector<double> demand(bundle.demand.begin() + std::ptrdiff_t(segment_start),
                                   bundle.demand.end());
        std::vector<SupplyState> states(
            bundle.states.begin() + std::ptrdiff_t(segment_start),
            bundle.states.end());
        SimOptions opts;
        opts.initial_stock = settings.initial_stock < 0.0
                                 ? bundle.states[segment_start].stock
                                 : settings.initial_stock;
        slot.ops = simulate(make_reorder_point_policy(rp), demand, states, opts).metrics;
        slot.has_forecast = false;
      } else {
        throw ConfigError("compare_models: unknown baseline '" + model.name + "'");
      }
    }
  });

  ComparisonResult result;
  for (auto& model : models) {
    ComparisonRow row;
    row.model = model.name;
    row.has_forecast = model.has_forecast;
    std::vector<RunOutcome> as_runs(model.per_seed.size());
    for (std::size_t i = 0; i < model.per_seed.size(); ++i) {
      as_runs[i].forecast = model.per_seed[i].forecast;
      as_runs[i].ops = model.per_seed[i].ops;
      as_runs[i].has_forecast_metrics = model.has_forecast;
    }
    row.forecast = mean_forecast(as_runs);
    row.ops = mean_ops(as_runs);
    result.rows.push_back(std::move(row));
  }

  // Paired tests against the strongest recurrent baseline present.
  std::string reference;
  for (const char* preferred : {"gru_policy", "two_stage"}) {
    for (const auto& m : models) {
      if (m.name == preferred) {
        reference = preferred;
        break;
      }
    }
    if (!reference.empty()) break;
  }
  if (!reference.empty() && seeds.size() >= 2) {
    const ModelScores* hybrid = &models[0];
    const ModelScores* ref = nullptr;
    for (const auto& m : models) {
      if (m.name == reference) ref = &m;
    }
    std::vector<double> mae_h, mae_r, cost_h, cost_r;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      mae_h.push_back(hybrid->per_seed[i].forecast.mae);
      mae_r.push_back(ref->per_seed[i].forecast.mae);
      cost_h.push_back(hybrid->per_seed[i].ops.total_cost);
      cost_r.push_back(ref->per_seed[i].ops.total_cost);
    }
    result.reference_baseline = reference;
    try {
      result.mae_test = paired_ttest(mae_h, mae_r);
      result.cost_test = paired_ttest(cost_h, cost_r);
      result.has_tests = true;
    } catch (const std::invalid_argument&) {
      result.has_tests = false;  // degenerate differences
    }
  }
  return result;
}

}  // namespace dsopt