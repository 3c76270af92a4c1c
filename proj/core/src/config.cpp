#include "dsopt/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace dsopt {

namespace {

using nlohmann::json;

// Tracks which keys of an object were consumed; leftovers are config errors.
class StrictObject {
 public:
  StrictObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw ConfigError("config: " + path_ + " must be an object");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  const json* take(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key)) return nullptr;
    return &j_.at(key);
  }

  template <typename T>
  void get(const char* key, T& out) {
    const json* v = take(key);
    if (v == nullptr) return;
    try {
      out = v->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config: bad value for " + path_ + "." + key + ": " + e.what());
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ConfigError("config: unknown key '" + path_ + "." + it.key() + "'");
      }
    }
  }

  const json& raw() const { return j_; }
  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::array<double, 2> get_range(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2) {
    throw ConfigError("config: " + path + " must be [low, high]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

void parse_state_ranges(const json& j, const std::string& path, StateRanges& out) {
  StrictObject o(j, path);
  if (const json* v = o.take("stock")) out.stock = get_range(*v, path + ".stock");
  if (const json* v = o.take("lead_time")) out.lead_time = get_range(*v, path + ".lead_time");
  o.get("lead_max", out.lead_max);
  if (const json* v = o.take("reliability")) out.reliability = get_range(*v, path + ".reliability");
  o.get("reliability_min", out.reliability_min);
  if (const json* v = o.take("defect_rate")) out.defect_rate = get_range(*v, path + ".defect_rate");
  o.get("unit_cost_production", out.unit_cost_production);
  o.get("unit_cost_holding", out.unit_cost_holding);
  if (const json* v = o.take("unit_cost_transport")) {
    if (!v->is_array() || v->size() != 3) {
      throw ConfigError("config: " + path + ".unit_cost_transport must have 3 entries");
    }
    for (std::size_t i = 0; i < 3; ++i) out.unit_cost_transport[i] = (*v)[i].get<double>();
  }
  o.get("unit_cost_shortage", out.unit_cost_shortage);
  o.finish();
}

void parse_synthetic(const json& j, SyntheticSpec& out) {
  StrictObject o(j, "dataset.synthetic");
  o.get("horizon", out.horizon);
  o.get("base_level", out.base_level);
  o.get("trend_slope", out.trend_slope);
  o.get("seasonal_amplitude", out.seasonal_amplitude);
  o.get("seasonal_period", out.seasonal_period);
  o.get("noise_std", out.noise_std);
  o.get("shock_probability", out.shock_probability);
  o.get("shock_magnitude", out.shock_magnitude);
  o.get("seed", out.seed);
  o.get("num_categories", out.num_categories);
  o.get("category_shift", out.category_shift);
  o.get("category_block", out.category_block);
  if (const json* v = o.take("states")) {
    parse_state_ranges(*v, "dataset.synthetic.states", out.states);
  }
  o.finish();
}

void parse_dataset(const json& j, DatasetConfig& out) {
  StrictObject o(j, "dataset");
  o.get("kind", out.kind);
  if (out.kind != "synthetic" && out.kind != "csv") {
    throw ConfigError("config: dataset.kind must be 'synthetic' or 'csv'");
  }
  if (const json* v = o.take("synthetic")) parse_synthetic(*v, out.synthetic);
  o.get("sales_csv", out.sales_csv);
  o.get("supply_csv", out.supply_csv);
  o.get("sales_schema", out.sales_schema);
  o.get("supply_schema", out.supply_schema);
  o.get("context_features", out.context_features);
  if (const json* v = o.take("state_defaults")) {
    parse_state_ranges(*v, "dataset.state_defaults", out.state_defaults);
  }
  o.finish();
}

void parse_pipeline(const json& j, PipelineOptions& out) {
  StrictObject o(j, "preprocess");
  o.get("window", out.window_len);
  if (const json* v = o.take("fractions")) {
    if (!v->is_array() || v->size() != 3) {
      throw ConfigError("config: preprocess.fractions must have 3 entries");
    }
    for (std::size_t i = 0; i < 3; ++i) out.fractions[i] = (*v)[i].get<double>();
  }
  if (const json* v = o.take("augment")) {
    StrictObject a(*v, "preprocess.augment");
    a.get("enabled", out.augment);
    a.get("noise_std", out.augment_cfg.noise_std);
    a.get("supplier_dropout", out.augment_cfg.supplier_dropout);
    a.get("seed", out.augment_cfg.seed);
    a.finish();
  }
  o.finish();
}

void parse_model(const json& j, ForecasterConfig& out) {
  StrictObject o(j, "model");
  std::string cell = cell_name(out.cell);
  o.get("cell", cell);
  out.cell = cell_from_name(cell);
  if (const json* v = o.take("hidden")) {
    out.hidden.clear();
    for (const auto& h : *v) out.hidden.push_back(h.get<std::size_t>());
    if (out.hidden.empty()) throw ConfigError("config: model.hidden must be nonempty");
  }
  o.get("dense_units", out.dense_units);
  o.get("embed_dim", out.embed_dim);
  o.get("dropout", out.dropout);
  o.get("stochastic_head", out.stochastic_head);
  o.finish();
}

void parse_supply_net(const json& j, DecisionNetConfig& out) {
  StrictObject o(j, "supply_net");
  if (const json* v = o.take("hidden")) {
    if (!v->is_array() || v->size() != 2) {
      throw ConfigError("config: supply_net.hidden must have 2 entries");
    }
    out.hidden[0] = (*v)[0].get<std::size_t>();
    out.hidden[1] = (*v)[1].get<std::size_t>();
  }
  o.get("dropout", out.dropout);
  o.finish();
}

void parse_train(const json& j, TrainConfig& out) {
  StrictObject o(j, "train");
  o.get("lambda1", out.lambda1);
  o.get("lambda2", out.lambda2);
  o.get("learning_rate", out.learning_rate);
  o.get("beta1", out.beta1);
  o.get("beta2", out.beta2);
  o.get("adam_eps", out.adam_eps);
  o.get("batch_size", out.batch_size);
  o.get("max_epochs", out.max_epochs);
  o.get("patience", out.patience);
  o.get("seed", out.seed);
  o.get("detach", out.detach_forecast);
  o.get("stochastic", out.stochastic);
  o.get("clip_norm", out.clip_norm);
  o.finish();
}

void parse_cost(const json& j, CostParams& out, SupplierCatalog& catalog) {
  StrictObject o(j, "cost");
  o.get("alpha", out.alpha);
  o.get("beta", out.beta);
  o.get("rho_demand", out.rho_demand);
  o.get("rho_lead", out.rho_lead);
  o.get("rho_rel", out.rho_rel);
  o.get("smooth_tau", out.smooth_tau);
  double scale = 0.0;  // 0 requests the automatic normalizer
  o.get("cost_scale", scale);
  if (scale < 0.0) throw ConfigError("config: cost.cost_scale must be >= 0");
  out.cost_scale = scale;
  if (const json* v = o.take("suppliers")) {
    if (!v->is_array()) throw ConfigError("config: cost.suppliers must be an array");
    for (const auto& s : *v) {
      StrictObject so(s, "cost.suppliers[]");
      Supplier sup;
      so.get("name", sup.name);
      so.get("reliability", sup.reliability);
      so.get("lead_time", sup.lead_time);
      so.finish();
      catalog.push_back(std::move(sup));
    }
  }
  o.finish();
}

void parse_sweep(const json& j, std::vector<SweepAxis>& out) {
  if (!j.is_object()) throw ConfigError("config: evaluate.sweep must be an object");
  out.clear();
  for (auto it = j.begin(); it != j.end(); ++it) {
    SweepAxis axis;
    axis.parameter = it.key();
    if (axis.parameter != "learning_rate" && axis.parameter != "batch_size" &&
        axis.parameter != "embed_dim") {
      throw ConfigError("config: unknown sweep parameter '" + axis.parameter + "'");
    }
    for (const auto& v : it.value()) axis.values.push_back(v.get<double>());
    out.push_back(std::move(axis));
  }
}

void parse_evaluate(const json& j, EvalConfig& out) {
  StrictObject o(j, "evaluate");
  o.get("seeds", out.seeds);
  o.get("baselines", out.baselines);
  o.get("ablation", out.ablation);
  if (const json* v = o.take("sweep")) parse_sweep(*v, out.sweep);
  o.get("initial_stock", out.initial_stock);
  o.get("eoq_order_cost", out.eoq_order_cost);
  o.get("seasonal_period", out.seasonal_period);
  o.get("ar_order", out.ar_order);
  o.finish();
}

json ranges_to_json(const StateRanges& r) {
  return json{{"stock", {r.stock[0], r.stock[1]}},
              {"lead_time", {r.lead_time[0], r.lead_time[1]}},
              {"lead_max", r.lead_max},
              {"reliability", {r.reliability[0], r.reliability[1]}},
              {"reliability_min", r.reliability_min},
              {"defect_rate", {r.defect_rate[0], r.defect_rate[1]}},
              {"unit_cost_production", r.unit_cost_production},
              {"unit_cost_holding", r.unit_cost_holding},
              {"unit_cost_transport",
               {r.unit_cost_transport[0], r.unit_cost_transport[1],
                r.unit_cost_transport[2]}},
              {"unit_cost_shortage", r.unit_cost_shortage}};
}

}  // namespace

ExperimentSettings RunConfig::experiment_settings() const {
  ExperimentSettings s;
  s.forecaster = model;
  s.decision = supply_net;
  s.train = train;
  s.cost = cost;
  s.catalog = catalog;
  s.pipeline = pipeline;
  s.two_phase = two_phase;
  s.initial_stock = evaluate.initial_stock;
  s.eoq_order_cost = evaluate.eoq_order_cost;
  s.seasonal_period = evaluate.seasonal_period;
  s.ar_order = evaluate.ar_order;
  return s;
}

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig cfg;
  cfg.cost.cost_scale = 0.0;  // default: automatic normalizer
  StrictObject o(j, "");
  if (const json* v = o.take("dataset")) parse_dataset(*v, cfg.dataset);
  if (const json* v = o.take("preprocess")) parse_pipeline(*v, cfg.pipeline);
  if (const json* v = o.take("model")) parse_model(*v, cfg.model);
  if (const json* v = o.take("supply_net")) parse_supply_net(*v, cfg.supply_net);
  if (const json* v = o.take("train")) parse_train(*v, cfg.train);
  if (const json* v = o.take("cost")) parse_cost(*v, cfg.cost, cfg.catalog);
  if (const json* v = o.take("evaluate")) parse_evaluate(*v, cfg.evaluate);
  o.get("output_dir", cfg.out_dir);
  o.get("workers", cfg.workers);
  o.get("two_phase", cfg.two_phase);
  o.finish();

  cfg.model.window_len = cfg.pipeline.window_len;
  if (cfg.cost.cost_scale == 0.0) {
    cfg.cost.cost_scale = -1.0;  // marks "auto"; validated downstream as > 0
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string dump_config(const RunConfig& cfg) {
  json j;
  j["dataset"] = {
      {"kind", cfg.dataset.kind},
      {"synthetic",
       {{"horizon", cfg.dataset.synthetic.horizon},
        {"base_level", cfg.dataset.synthetic.base_level},
        {"trend_slope", cfg.dataset.synthetic.trend_slope},
        {"seasonal_amplitude", cfg.dataset.synthetic.seasonal_amplitude},
        {"seasonal_period", cfg.dataset.synthetic.seasonal_period},
        {"noise_std", cfg.dataset.synthetic.noise_std},
        {"shock_probability", cfg.dataset.synthetic.shock_probability},
        {"shock_magnitude", cfg.dataset.synthetic.shock_magnitude},
        {"seed", cfg.dataset.synthetic.seed},
        {"num_categories", cfg.dataset.synthetic.num_categories},
        {"category_shift", cfg.dataset.synthetic.category_shift},
        {"category_block", cfg.dataset.synthetic.category_block},
        {"states", ranges_to_json(cfg.dataset.synthetic.states)}}},
      {"sales_csv", cfg.dataset.sales_csv},
      {"supply_csv", cfg.dataset.supply_csv},
      {"sales_schema", cfg.dataset.sales_schema},
      {"supply_schema", cfg.dataset.supply_schema},
      {"context_features", cfg.dataset.context_features},
      {"state_defaults", ranges_to_json(cfg.dataset.state_defaults)},
  };
  j["preprocess"] = {
      {"window", cfg.pipeline.window_len},
      {"fractions",
       {cfg.pipeline.fractions[0], cfg.pipeline.fractions[1], cfg.pipeline.fractions[2]}},
      {"augment",
       {{"enabled", cfg.pipeline.augment},
        {"noise_std", cfg.pipeline.augment_cfg.noise_std},
        {"supplier_dropout", cfg.pipeline.augment_cfg.supplier_dropout},
        {"seed", cfg.pipeline.augment_cfg.seed}}},
  };
  j["model"] = {
      {"cell", cell_name(cfg.model.cell)},
      {"hidden", cfg.model.hidden},
      {"dense_units", cfg.model.dense_units},
      {"embed_dim", cfg.model.embed_dim},
      {"dropout", cfg.model.dropout},
      {"stochastic_head", cfg.model.stochastic_head},
  };
  j["supply_net"] = {
      {"hidden", {cfg.supply_net.hidden[0], cfg.supply_net.hidden[1]}},
      {"dropout", cfg.supply_net.dropout},
  };
  j["train"] = {
      {"lambda1", cfg.train.lambda1},
      {"lambda2", cfg.train.lambda2},
      {"learning_rate", cfg.train.learning_rate},
      {"beta1", cfg.train.beta1},
      {"beta2", cfg.train.beta2},
      {"adam_eps", cfg.train.adam_eps},
      {"batch_size", cfg.train.batch_size},
      {"max_epochs", cfg.train.max_epochs},
      {"patience", cfg.train.patience},
      {"seed", cfg.train.seed},
      {"detach", cfg.train.detach_forecast},
      {"stochastic", cfg.train.stochastic},
      {"clip_norm", cfg.train.clip_norm},
  };
  json suppliers = json::array();
  for (const auto& s : cfg.catalog) {
    suppliers.push_back({{"name", s.name},
                         {"reliability", s.reliability},
                         {"lead_time", s.lead_time}});
  }
  j["cost"] = {
      {"alpha", cfg.cost.alpha},
      {"beta", cfg.cost.beta},
      {"rho_demand", cfg.cost.rho_demand},
      {"rho_lead", cfg.cost.rho_lead},
      {"rho_rel", cfg.cost.rho_rel},
      {"smooth_tau", cfg.cost.smooth_tau},
      {"cost_scale", cfg.cost.cost_scale < 0.0 ? 0.0 : cfg.cost.cost_scale},
      {"suppliers", suppliers},
  };
  json sweep = json::object();
  for (const auto& axis : cfg.evaluate.sweep) sweep[axis.parameter] = axis.values;
  j["evaluate"] = {
      {"seeds", cfg.evaluate.seeds},
      {"baselines", cfg.evaluate.baselines},
      {"ablation", cfg.evaluate.ablation},
      {"sweep", sweep},
      {"initial_stock", cfg.evaluate.initial_stock},
      {"eoq_order_cost", cfg.evaluate.eoq_order_cost},
      {"seasonal_period", cfg.evaluate.seasonal_period},
      {"ar_order", cfg.evaluate.ar_order},
  };
  // Location and scheduling knobs (output_dir, workers) stay out of the
  // canonical dump: they do not influence any emitted number.
  j["two_phase"] = cfg.two_phase;
  return j.dump(2);
}

std::uint64_t config_hash(const RunConfig& cfg) {
  const std::string text = dump_config(cfg);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string config_hash_hex(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));
  return buf;
}

}  // namespace dsopt
