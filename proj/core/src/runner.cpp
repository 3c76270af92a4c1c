#include "dsopt/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dsopt/checkpoint.hpp"
#include "dsopt/csv.hpp"
#include "json.hpp"

namespace dsopt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::int64_t kSyntheticEpochDay = 18262;  // 2020-01-01
constexpr std::uint64_t kCsvStateSeed = 0xD5D5D5D5ULL;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string meta_line(const RunConfig& cfg) {
  std::string line = "# config " + config_hash_hex(cfg) + " seeds";
  for (auto s : cfg.evaluate.seeds) line += " " + std::to_string(s);
  return line;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("runner: cannot write '" + path.string() + "'");
  out << text;
}

void write_table(const RunConfig& cfg, const fs::path& path,
                 const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  out << meta_line(cfg) << '\n';
  for (std::size_t i = 0; i < header.size(); ++i) {
    out << (i ? "," : "") << header[i];
  }
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
  write_text(path, out.str());
}

void write_json_artifact(const RunConfig& cfg, const fs::path& path, json payload) {
  payload["_meta"] = {{"config_hash", config_hash_hex(cfg)},
                      {"seeds", cfg.evaluate.seeds}};
  write_text(path, payload.dump(2) + "\n");
}

std::string iso_date(std::int64_t day) {
  // Inverse of days_from_civil (proleptic Gregorian).
  std::int64_t z = day + 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02u",
                static_cast<long long>(y + (m <= 2)), m, d);
  return buf;
}

json forecast_to_json(const ForecastMetrics& m) {
  return {{"mae", m.mae},
          {"rmse", m.rmse},
          {"mape", m.mape},
          {"smape", m.smape},
          {"mape_skipped", m.mape_skipped}};
}

json ops_to_json(const OpsMetrics& m) {
  return {{"inventory_cost", m.inventory_cost},
          {"stockout_rate", m.stockout_rate},
          {"service_level", m.service_level},
          {"total_cost", m.total_cost}};
}

json stat_to_json(const StatResult& r) {
  return {{"mean", r.mean},   {"stddev", r.stddev},
          {"n", r.n},         {"ci95_half", r.ci95_half},
          {"t", r.t_stat},    {"p_two_tailed", r.p_two_tailed},
          {"df", r.df}};
}

double range_mid(const std::array<double, 2>& r) { return 0.5 * (r[0] + r[1]); }

// Supply-table roles onto state fields; anything unmapped falls back to the
// configured defaults.
SupplyState default_state(const StateRanges& d) {
  SupplyState s;
  s.stock = range_mid(d.stock);
  s.lead_actual = range_mid(d.lead_time);
  s.lead_max = d.lead_max;
  s.r_supplier = range_mid(d.reliability);
  s.r_min = d.reliability_min;
  s.defect_rate = range_mid(d.defect_rate);
  s.c_prod = d.unit_cost_production;
  s.c_hold = d.unit_cost_holding;
  s.c_trans = d.unit_cost_transport;
  s.c_short = d.unit_cost_shortage;
  return s;
}

SeriesBundle bundle_from_csv(const RunConfig& cfg) {
  const DatasetConfig& dc = cfg.dataset;
  if (dc.sales_csv.empty()) {
    throw ConfigError("config: dataset.kind is 'csv' but sales_csv is empty");
  }
  if (!dc.sales_schema.count("date") || !dc.sales_schema.count("quantity")) {
    throw ConfigError("config: sales_schema must map the 'date' and 'quantity' roles");
  }
  RawTable sales = ingest_csv(dc.sales_csv, dc.sales_schema, sales_roles());
  const std::size_t t = sales.rows();
  if (t < cfg.pipeline.window_len + 2) {
    throw DataError("dataset: only " + std::to_string(t) + " sales periods");
  }
  sales = impute(sales, fit_impute(sales, std::size_t(std::floor(0.7 * double(t) + 1e-9))));

  SeriesBundle bundle;
  bundle.demand = sales.column("quantity").reals;

  RawTable supply;
  bool has_supply = !dc.supply_csv.empty();
  std::vector<std::size_t> supply_row_for_period(t, 0);
  if (has_supply) {
    supply = ingest_csv(dc.supply_csv, dc.supply_schema, supply_roles());
    if (supply.rows() == 0) throw DataError("dataset: supply table has no rows");
    supply = impute(supply, fit_impute(supply, std::size_t(std::floor(
                                                   0.7 * double(supply.rows()) + 1e-9))));
    if (supply.has_column("date")) {
      // Forward fill: the latest supply record on or before each sales date.
      const auto& sd = sales.column("date").reals;
      const auto& pd = supply.column("date").reals;
      for (std::size_t i = 0; i < t; ++i) {
        std::size_t best = 0;
        for (std::size_t r = 0; r < pd.size(); ++r) {
          if (pd[r] <= sd[i]) best = r;
        }
        supply_row_for_period[i] = best;
      }
    } else {
      for (std::size_t i = 0; i < t; ++i) supply_row_for_period[i] = i % supply.rows();
    }
  }

  const SupplyState fallback = default_state(dc.state_defaults);
  auto field_value = [&](const char* role, std::size_t row, double fallback_value) {
    if (!has_supply || !supply.has_column(role)) return fallback_value;
    return supply.column(role).reals[row];
  };
  for (std::size_t i = 0; i < t; ++i) {
    const std::size_t row = supply_row_for_period[i];
    SupplyState s;
    s.stock = field_value("stock-level", row, fallback.stock);
    s.lead_actual = field_value("lead-time", row, fallback.lead_actual);
    s.lead_max = field_value("lead-time-max", row, fallback.lead_max);
    s.r_supplier = field_value("reliability", row, fallback.r_supplier);
    s.r_min = field_value("reliability-min", row, fallback.r_min);
    s.defect_rate = field_value("defect-rate", row, fallback.defect_rate);
    s.c_prod = field_value("unit-cost-production", row, fallback.c_prod);
    s.c_hold = field_value("unit-cost-holding", row, fallback.c_hold);
    s.c_trans[0] = field_value("unit-cost-transport-0", row, fallback.c_trans[0]);
    s.c_trans[1] = field_value("unit-cost-transport-1", row, fallback.c_trans[1]);
    s.c_trans[2] = field_value("unit-cost-transport-2", row, fallback.c_trans[2]);
    s.c_short = field_value("unit-cost-shortage", row, fallback.c_short);
    bundle.states.push_back(s);
  }

  for (const auto& feature : dc.context_features) {
    std::vector<std::string> labels(t);
    if (sales.has_column(feature) &&
        sales.column(feature).kind == ColumnKind::categorical) {
      labels = sales.column(feature).labels;
    } else if (has_supply && supply.has_column(feature) &&
               supply.column(feature).kind == ColumnKind::categorical) {
      for (std::size_t i = 0; i < t; ++i) {
        labels[i] = supply.column(feature).labels[supply_row_for_period[i]];
      }
    } else {
      throw ConfigError("config: context feature '" + feature +
                        "' is not an ingested categorical column");
    }
    bundle.context_labels.push_back(std::move(labels));
  }
  return bundle;
}

ForecasterConfig resolve_forecaster_cfg(const RunConfig& cfg, const WindowedDataset& ds) {
  ForecasterConfig fc = cfg.model;
  fc.window_len = cfg.pipeline.window_len;
  fc.vocab_sizes.clear();
  for (const auto& v : ds.vocabs) fc.vocab_sizes.push_back(v.size());
  return fc;
}

json train_result_to_json(const TrainResult& r) {
  return {{"best_epoch", r.best_epoch},
          {"best_val_loss", r.best_val_loss},
          {"epochs_run", r.epochs_run},
          {"stopped_early", r.stopped_early}};
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

void cmd_synth(const RunConfig& cfg, const fs::path& out) {
  if (cfg.dataset.kind != "synthetic") {
    throw ConfigError("synth: dataset.kind must be 'synthetic'");
  }
  SyntheticResult r = generate_synthetic(cfg.dataset.synthetic);
  const std::size_t t = r.bundle.demand.size();

  std::vector<std::string> sales_header{"date", "quantity"};
  const bool has_cat = !r.bundle.context_labels.empty();
  if (has_cat) sales_header.push_back("category");
  std::vector<std::vector<std::string>> sales_rows;
  for (std::size_t i = 0; i < t; ++i) {
    std::vector<std::string> row{iso_date(kSyntheticEpochDay + std::int64_t(i)),
                                 fmt(r.bundle.demand[i])};
    if (has_cat) row.push_back(r.bundle.context_labels[0][i]);
    sales_rows.push_back(std::move(row));
  }
  write_table(cfg, out / "sales.csv", sales_header, sales_rows);

  std::vector<std::string> supply_header{
      "date",           "stock_level",    "lead_time",        "lead_time_max",
      "reliability",    "reliability_min", "defect_rate",     "unit_cost_production",
      "unit_cost_holding", "unit_cost_transport_0", "unit_cost_transport_1",
      "unit_cost_transport_2", "unit_cost_shortage"};
  std::vector<std::vector<std::string>> supply_rows;
  for (std::size_t i = 0; i < t; ++i) {
    const SupplyState& s = r.bundle.states[i];
    supply_rows.push_back({iso_date(kSyntheticEpochDay + std::int64_t(i)),
                           fmt(s.stock), fmt(s.lead_actual), fmt(s.lead_max),
                           fmt(s.r_supplier), fmt(s.r_min), fmt(s.defect_rate),
                           fmt(s.c_prod), fmt(s.c_hold), fmt(s.c_trans[0]),
                           fmt(s.c_trans[1]), fmt(s.c_trans[2]), fmt(s.c_short)});
  }
  write_table(cfg, out / "supply.csv", supply_header, supply_rows);

  write_json_artifact(cfg, out / "synth_summary.json",
                      json{{"horizon", t}, {"shock_count", r.shock_count}});
}

void cmd_preprocess(const RunConfig& cfg, const fs::path& out) {
  SeriesBundle bundle = build_bundle(cfg);
  PipelineOptions opt = cfg.pipeline;
  WindowedDataset ds = assemble_dataset(bundle, opt);

  json vocabs = json::array();
  for (const auto& v : ds.vocabs) vocabs.push_back(v.size());
  std::size_t augmented = 0;
  for (const auto& s : ds.samples) augmented += s.augmented;

  write_json_artifact(
      cfg, out / "dataset_summary.json",
      json{{"periods", bundle.demand.size()},
           {"window", ds.window_len},
           {"train_end", ds.split.spec.train_end},
           {"val_end", ds.split.spec.val_end},
           {"counts",
            {{"train", ds.split.counts[0]},
             {"val", ds.split.counts[1]},
             {"test", ds.split.counts[2]},
             {"dropped_boundary", ds.split.dropped},
             {"augmented", augmented}}},
           {"empty_splits",
            {{"train", ds.split.empty[0]},
             {"val", ds.split.empty[1]},
             {"test", ds.split.empty[2]}}},
           {"demand_scaler", {{"min", ds.demand_scaler.min}, {"max", ds.demand_scaler.max}}},
           {"vocab_sizes", vocabs}});

  write_table(cfg, out / "splits.csv",
              {"split", "samples"},
              {{"train", std::to_string(ds.split.counts[0])},
               {"val", std::to_string(ds.split.counts[1])},
               {"test", std::to_string(ds.split.counts[2])},
               {"dropped", std::to_string(ds.split.dropped)}});
}

void cmd_pretrain(const RunConfig& cfg, const fs::path& out) {
  SeriesBundle bundle = build_bundle(cfg);
  WindowedDataset ds = assemble_dataset(bundle, cfg.pipeline);
  Forecaster forecaster(resolve_forecaster_cfg(cfg, ds), cfg.train.seed);
  TrainResult r = pretrain_forecaster(forecaster, ds, cfg.train);

  save_checkpoint((out / "forecaster.ckpt").string(), forecaster.params());
  std::ostringstream hist;
  write_history_csv(hist, r.history);
  write_text(out / "history_phase1.csv", meta_line(cfg) + "\n" + hist.str());
  write_json_artifact(cfg, out / "pretrain_summary.json",
                      json{{"phase1", train_result_to_json(r)},
                           {"parameters", forecaster.param_count()}});
}

void cmd_train(const RunConfig& cfg, const fs::path& out) {
  SeriesBundle bundle = build_bundle(cfg);
  PipelineOptions opt = cfg.pipeline;
  opt.augment_cfg.seed = cfg.train.seed ^ 0xA5A5A5A5ULL;
  WindowedDataset ds = assemble_dataset(bundle, opt);

  Forecaster forecaster(resolve_forecaster_cfg(cfg, ds), cfg.train.seed);
  DecisionNetConfig dc = cfg.supply_net;
  dc.supplier_count = cfg.catalog.empty() ? 1 : cfg.catalog.size();
  DecisionNet net(dc, cfg.train.seed ^ 0x51f15eedULL);
  net.state_scaler() = ds.state_scaler;

  CostParams cost = cfg.cost;
  if (cost.cost_scale <= 0.0) cost.cost_scale = compute_cost_scale(ds);

  json summary;
  summary["cost_scale"] = cost.cost_scale;
  summary["parameters"] = {{"forecaster", forecaster.param_count()},
                           {"decision_net", net.param_count()}};

  if (cfg.two_phase) {
    TrainResult phase1 = pretrain_forecaster(forecaster, ds, cfg.train);
    std::ostringstream hist;
    write_history_csv(hist, phase1.history);
    write_text(out / "history_phase1.csv", meta_line(cfg) + "\n" + hist.str());
    summary["phase1"] = train_result_to_json(phase1);
  }

  TrainResult phase2 = train_joint(forecaster, net, ds, cost, cfg.catalog, cfg.train);
  std::ostringstream hist;
  write_history_csv(hist, phase2.history);
  write_text(out / "history_phase2.csv", meta_line(cfg) + "\n" + hist.str());
  summary["phase2"] = train_result_to_json(phase2);

  save_checkpoint((out / "forecaster.ckpt").string(), forecaster.params());
  save_checkpoint((out / "decision.ckpt").string(), net.params());
  write_json_artifact(cfg, out / "train_summary.json", summary);
}

std::string blank_if(bool blank, double v) { return blank ? "" : fmt(v); }

void cmd_evaluate(const RunConfig& cfg, const fs::path& out) {
  SeriesBundle bundle = build_bundle(cfg);
  ComparisonResult r =
      compare_models(bundle, cfg.experiment_settings(), cfg.evaluate.baselines,
                     cfg.evaluate.seeds, cfg.workers);

  std::vector<std::vector<std::string>> rows;
  json jrows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({row.model, blank_if(!row.has_forecast, row.forecast.mae),
                    blank_if(!row.has_forecast, row.forecast.rmse),
                    blank_if(!row.has_forecast, row.forecast.mape),
                    blank_if(!row.has_forecast, row.forecast.smape),
                    fmt(row.ops.inventory_cost), fmt(row.ops.stockout_rate),
                    fmt(row.ops.service_level), fmt(row.ops.total_cost)});
    json jr = {{"model", row.model}, {"ops", ops_to_json(row.ops)}};
    jr["forecast"] = row.has_forecast ? forecast_to_json(row.forecast) : json(nullptr);
    jrows.push_back(std::move(jr));
  }
  write_table(cfg, out / "comparison.csv",
              {"model", "mae", "rmse", "mape", "smape", "inventory_cost",
               "stockout_rate", "service_level", "total_cost"},
              rows);

  json payload = {{"rows", jrows}};
  if (r.has_tests) {
    payload["significance"] = {{"reference", r.reference_baseline},
                               {"mae", stat_to_json(r.mae_test)},
                               {"total_cost", stat_to_json(r.cost_test)}};
  }
  write_json_artifact(cfg, out / "comparison.json", payload);
}

void cmd_simulate(const RunConfig& cfg, const fs::path& out) {
  SeriesBundle bundle = build_bundle(cfg);
  const std::uint64_t seed =
      cfg.evaluate.seeds.empty() ? cfg.train.seed : cfg.evaluate.seeds.front();
  RunOutcome r =
      run_experiment(bundle, cfg.experiment_settings(), Variant::full_hybrid, seed);

  std::vector<std::vector<std::string>> rows;
  for (const auto& p : r.sim.ledger) {
    rows.push_back({std::to_string(p.t), fmt(p.demand), fmt(p.order_placed),
                    fmt(p.arrivals), fmt(p.stock_after_arrivals), fmt(p.served),
                    fmt(p.unmet), fmt(p.end_stock), std::to_string(p.mode),
                    std::to_string(p.supplier), fmt(p.cost.production),
                    fmt(p.cost.inventory), fmt(p.cost.transport),
                    fmt(p.cost.shortage), fmt(p.cost.total),
                    p.fulfilled ? "1" : "0"});
  }
  write_table(cfg, out / "ledger.csv",
              {"period", "demand", "order", "arrivals", "stock_after_arrivals",
               "served", "unmet", "end_stock", "mode", "supplier", "c_production",
               "c_inventory", "c_transport", "c_shortage", "c_total", "fulfilled"},
              rows);
  write_json_artifact(cfg, out / "ops.json",
                      json{{"metrics", ops_to_json(r.ops)},
                           {"initial_stock", r.sim.initial_stock},
                           {"end_stock", r.sim.end_stock},
                           {"total_delivered", r.sim.total_delivered},
                           {"total_served", r.sim.total_served},
                           {"orders_placed", r.sim.orders_placed},
                           {"segment_start", r.segment_start},
                           {"seed", seed}});
}

void cmd_ablate(const RunConfig& cfg, const fs::path& out) {
  SeriesBundle bundle = build_bundle(cfg);
  std::vector<Variant> toggles;
  for (const auto& name : cfg.evaluate.ablation) {
    toggles.push_back(variant_from_name(name));
  }
  auto rows = ablation_run(bundle, cfg.experiment_settings(), toggles,
                           cfg.evaluate.seeds, cfg.workers);

  std::vector<std::vector<std::string>> csv_rows;
  json jrows = json::array();
  for (const auto& row : rows) {
    csv_rows.push_back({row.configuration, blank_if(!row.has_forecast, row.forecast.mae),
                        blank_if(!row.has_forecast, row.forecast.rmse),
                        blank_if(!row.has_forecast, row.forecast.mape),
                        fmt(row.ops.inventory_cost), fmt(row.ops.stockout_rate),
                        fmt(row.ops.service_level)});
    json jr = {{"configuration", row.configuration},
               {"ops", ops_to_json(row.ops)},
               {"seeds", row.seed_count}};
    jr["forecast"] = row.has_forecast ? forecast_to_json(row.forecast) : json(nullptr);
    jrows.push_back(std::move(jr));
  }
  write_table(cfg, out / "ablation.csv",
              {"configuration", "mae", "rmse", "mape", "inventory_cost",
               "stockout_rate", "service_level"},
              csv_rows);
  write_json_artifact(cfg, out / "ablation.json", json{{"rows", jrows}});
}

void cmd_sweep(const RunConfig& cfg, const fs::path& out) {
  SeriesBundle bundle = build_bundle(cfg);
  auto cells = sensitivity_sweep(bundle, cfg.experiment_settings(),
                                 cfg.evaluate.sweep, cfg.evaluate.seeds, cfg.workers);
  std::vector<std::vector<std::string>> rows;
  json jrows = json::array();
  for (const auto& c : cells) {
    rows.push_back({c.parameter, fmt(c.value), fmt(c.mae), fmt(c.total_cost),
                    fmt(c.service_level), std::to_string(c.seed_count)});
    jrows.push_back({{"parameter", c.parameter},
                     {"value", c.value},
                     {"mae", c.mae},
                     {"total_cost", c.total_cost},
                     {"service_level", c.service_level},
                     {"seeds", c.seed_count}});
  }
  write_table(cfg, out / "sweep.csv",
              {"parameter", "value", "mae", "total_cost", "service_level", "seeds"},
              rows);
  write_json_artifact(cfg, out / "sweep.json", json{{"rows", jrows}});
}

void cmd_gradcheck(const RunConfig& cfg, const fs::path& out) {
  // Tiny hybrid on a short synthetic trace; checks every parameter of the
  // joint objective against central differences.
  SyntheticSpec spec;
  spec.horizon = 40;
  spec.noise_std = 4.0;
  spec.num_categories = 3;
  spec.category_shift = 10.0;
  spec.category_block = 4;
  spec.seed = cfg.train.seed;
  SeriesBundle bundle = generate_synthetic(spec).bundle;

  PipelineOptions opt;
  opt.window_len = 5;
  opt.augment = false;
  WindowedDataset ds = assemble_dataset(bundle, opt);

  ForecasterConfig fc;
  fc.window_len = 5;
  fc.cell = cfg.model.cell;
  fc.hidden = {4};
  fc.dense_units = 3;
  fc.embed_dim = 2;
  fc.dropout = 0.0;
  fc.stochastic_head = cfg.model.stochastic_head;
  for (const auto& v : ds.vocabs) fc.vocab_sizes.push_back(v.size());
  Forecaster forecaster(fc, cfg.train.seed);

  DecisionNetConfig dc;
  dc.hidden = {4, 3};
  dc.dropout = 0.0;
  dc.supplier_count = cfg.catalog.empty() ? 1 : cfg.catalog.size();
  DecisionNet net(dc, cfg.train.seed ^ 0x51f15eedULL);
  net.state_scaler() = ds.state_scaler;

  CostParams cost = cfg.cost;
  if (cost.cost_scale <= 0.0) cost.cost_scale = compute_cost_scale(ds);

  TrainConfig tc = cfg.train;
  tc.detach_forecast = false;

  std::vector<std::size_t> batch = ds.indices_of(Split::train);
  if (batch.size() > 4) batch.resize(4);

  std::vector<ad::Tensor*> params;
  std::size_t param_count = 0;
  for (auto& [name, t] : forecaster.params()) {
    params.push_back(t);
    param_count += t->numel();
  }
  for (auto& [name, t] : net.params()) {
    params.push_back(t);
    param_count += t->numel();
  }

  auto fn = [&]() {
    return batch_loss_nodes(forecaster, net, ds, batch, cost, cfg.catalog, tc,
                            nullptr, nullptr, nullptr)
        .total;
  };
  const double max_err = ad::grad_check(fn, params, 1e-5);
  const double threshold = 1e-4;
  const bool passed = max_err < threshold;
  std::cout << "gradcheck: max relative error " << max_err << " over " << param_count
            << " parameters (threshold " << threshold << ") -> "
            << (passed ? "PASS" : "FAIL") << "\n";
  write_json_artifact(cfg, out / "gradcheck.json",
                      json{{"max_relative_error", max_err},
                           {"threshold", threshold},
                           {"parameters", param_count},
                           {"passed", passed}});
  if (!passed) {
    throw NumericError("gradcheck: max relative error " + fmt(max_err) +
                       " exceeds threshold");
  }
}

void cmd_report(const RunConfig& cfg, const fs::path& out) {
  std::ostringstream report;
  report << "run report (config " << config_hash_hex(cfg) << ")\n";

  auto load = [&](const char* name, json& dst) {
    std::ifstream in(out / name);
    if (!in) return false;
    try {
      in >> dst;
    } catch (const json::exception&) {
      return false;
    }
    return true;
  };

  json j;
  if (load("dataset_summary.json", j)) {
    report << "\ndataset: " << j["periods"] << " periods, window " << j["window"]
           << ", samples train/val/test " << j["counts"]["train"] << "/"
           << j["counts"]["val"] << "/" << j["counts"]["test"] << " (dropped "
           << j["counts"]["dropped_boundary"] << ")\n";
  }
  if (load("train_summary.json", j)) {
    report << "\ntraining:\n";
    if (j.contains("phase1")) {
      report << "  phase 1 best val loss " << j["phase1"]["best_val_loss"]
             << " at epoch " << j["phase1"]["best_epoch"] << "\n";
    }
    report << "  phase 2 best val loss " << j["phase2"]["best_val_loss"]
           << " at epoch " << j["phase2"]["best_epoch"] << " (cost scale "
           << j["cost_scale"] << ")\n";
  }
  if (load("comparison.json", j)) {
    report << "\nmodel comparison (means over seeds):\n";
    for (const auto& row : j["rows"]) {
      report << "  " << row["model"].get<std::string>() << ": total cost "
             << row["ops"]["total_cost"] << ", service level "
             << row["ops"]["service_level"] << "%";
      if (!row["forecast"].is_null()) {
        report << ", MAE " << row["forecast"]["mae"];
      }
      report << "\n";
    }
    if (j.contains("significance")) {
      report << "  paired t vs " << j["significance"]["reference"].get<std::string>()
             << ": MAE p=" << j["significance"]["mae"]["p_two_tailed"]
             << ", cost p=" << j["significance"]["total_cost"]["p_two_tailed"] << "\n";
    }
  }
  if (load("ablation.json", j)) {
    report << "\nablation (means over seeds):\n";
    for (const auto& row : j["rows"]) {
      report << "  " << row["configuration"].get<std::string>() << ": ";
      if (!row["forecast"].is_null()) {
        report << "MAE " << row["forecast"]["mae"] << ", ";
      }
      report << "inventory cost " << row["ops"]["inventory_cost"] << ", SL "
             << row["ops"]["service_level"] << "%\n";
    }
  }
  if (load("sweep.json", j)) {
    report << "\nsensitivity sweep:\n";
    for (const auto& row : j["rows"]) {
      report << "  " << row["parameter"].get<std::string>() << " = " << row["value"]
             << ": MAE " << row["mae"] << ", total cost " << row["total_cost"] << "\n";
    }
  }
  if (load("gradcheck.json", j)) {
    report << "\ngradcheck: max relative error " << j["max_relative_error"] << " ("
           << (j["passed"].get<bool>() ? "pass" : "FAIL") << ")\n";
  }
  write_text(out / "summary.txt", report.str());
  std::cout << report.str();
}

}  // namespace

SeriesBundle build_bundle(const RunConfig& cfg) {
  if (cfg.dataset.kind == "synthetic") {
    return generate_synthetic(cfg.dataset.synthetic).bundle;
  }
  return bundle_from_csv(cfg);
}

const std::vector<std::string>& known_subcommands() {
  static const std::vector<std::string> kCommands{
      "preprocess", "pretrain", "train",     "evaluate", "simulate",
      "ablate",     "sweep",    "gradcheck", "synth",    "report"};
  return kCommands;
}

void run_command(const std::string& subcommand, const RunConfig& cfg) {
  const auto& known = known_subcommands();
  if (std::find(known.begin(), known.end(), subcommand) == known.end()) {
    throw ConfigError("unknown subcommand '" + subcommand + "'");
  }
  fs::path out(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw DataError("runner: cannot create output directory '" + cfg.out_dir + "'");

  // Resolved-config echo makes every run reproducible from its artifacts.
  write_text(out / "config.json", dump_config(cfg) + "\n");

  if (subcommand == "synth") return cmd_synth(cfg, out);
  if (subcommand == "preprocess") return cmd_preprocess(cfg, out);
  if (subcommand == "pretrain") return cmd_pretrain(cfg, out);
  if (subcommand == "train") return cmd_train(cfg, out);
  if (subcommand == "evaluate") return cmd_evaluate(cfg, out);
  if (subcommand == "simulate") return cmd_simulate(cfg, out);
  if (subcommand == "ablate") return cmd_ablate(cfg, out);
  if (subcommand == "sweep") return cmd_sweep(cfg, out);
  if (subcommand == "gradcheck") return cmd_gradcheck(cfg, out);
  if (subcommand == "report") return cmd_report(cfg, out);
}

}  // namespace dsopt
