#include "dsopt/supply.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dsopt {

namespace {

std::size_t argmax(const double* v, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

void check_unit_range(double v, const char* what) {
  if (v < 0.0 || v > 1.0) {
    throw std::invalid_argument(std::string("SupplyState: ") + what +
                                " must lie in [0,1], got " + std::to_string(v));
  }
}

ad::Tensor init_tensor(std::vector<std::size_t> shape, std::size_t fan_in,
                       std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  ad::Tensor t = ad::Tensor::zeros(std::move(shape));
  for (auto& v : t.values) v = dist(rng);
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// SupplyState
// ---------------------------------------------------------------------------

std::array<double, SupplyState::kFeatureCount> SupplyState::features() const {
  return {stock,   lead_actual, lead_max, r_supplier, r_min,      defect_rate,
          c_prod,  c_hold,      c_trans[0], c_trans[1], c_trans[2], c_short};
}

SupplyState SupplyState::from_features(const std::array<double, kFeatureCount>& f) {
  SupplyState s;
  s.stock = f[0];
  s.lead_actual = f[1];
  s.lead_max = f[2];
  s.r_supplier = f[3];
  s.r_min = f[4];
  s.defect_rate = f[5];
  s.c_prod = f[6];
  s.c_hold = f[7];
  s.c_trans = {f[8], f[9], f[10]};
  s.c_short = f[11];
  return s;
}

void SupplyState::validate() const {
  for (double v : features()) {
    if (v < 0.0 || !std::isfinite(v)) {
      throw std::invalid_argument("SupplyState: all features must be finite and >= 0");
    }
  }
  check_unit_range(r_supplier, "r_supplier");
  check_unit_range(r_min, "r_min");
  check_unit_range(defect_rate, "defect_rate");
}

std::size_t DecisionVector::chosen_supplier() const {
  if (supplier_scores.empty()) return 0;
  return argmax(supplier_scores.data(), supplier_scores.size());
}

std::size_t DecisionVector::chosen_mode() const {
  return argmax(mode_scores.data(), mode_scores.size());
}

void CostParams::validate() const {
  if (alpha < 0.0 || beta < 0.0) {
    throw std::invalid_argument("CostParams: alpha and beta must be >= 0");
  }
  if (rho_demand < 0.0 || rho_lead < 0.0 || rho_rel < 0.0) {
    throw std::invalid_argument("CostParams: penalty weights must be >= 0");
  }
  if (smooth_tau <= 0.0 || cost_scale <= 0.0) {
    throw std::invalid_argument("CostParams: smooth_tau and cost_scale must be > 0");
  }
}

// ---------------------------------------------------------------------------
// Cost accounting
// ---------------------------------------------------------------------------

CostBreakdown total_cost(const DecisionVector& o, const SupplyState& s,
                         double realized_demand) {
  CostBreakdown c;
  const double q = o.q_order;
  c.production = s.c_prod * q;
  c.inventory = s.c_hold * std::max(0.0, s.stock + q - realized_demand);
  c.transport = s.c_trans[o.chosen_mode()] * q;
  c.shortage = s.c_short * std::max(0.0, realized_demand - s.stock - q);
  c.total = c.production + c.inventory + c.transport + c.shortage;
  return c;
}

double constraint_penalty(const DecisionVector& o, const SupplyState& s,
                          double forecast, const CostParams& p,
                          const SupplierCatalog& catalog) {
  const double demand_gap = std::max(0.0, forecast - s.stock - o.q_order);
  const double lead_gap = std::max(0.0, s.lead_actual - s.lead_max);
  const double chosen_r =
      catalog.empty() ? s.r_supplier : catalog[o.chosen_supplier()].reliability;
  const double rel_gap = std::max(0.0, s.r_min - chosen_r);
  return p.rho_demand * demand_gap + p.rho_lead * lead_gap + p.rho_rel * rel_gap;
}

double service_level(std::size_t fulfilled, std::size_t total) {
  if (total == 0) throw std::invalid_argument("service_level: zero total periods");
  if (fulfilled > total) {
    throw std::invalid_argument("service_level: fulfilled exceeds total");
  }
  return static_cast<double>(fulfilled) / static_cast<double>(total);
}

double supply_loss(double c_total, double sl, const CostParams& p, double penalty) {
  if (sl < 0.0 || sl > 1.0) {
    throw std::invalid_argument("supply_loss: service level must lie in [0,1]");
  }
  return p.alpha * (c_total / p.cost_scale) + p.beta * (1.0 - sl) + penalty;
}

RepairedDecision repair(const DecisionVector& o, double forecast,
                        const SupplyState& s, const SupplierCatalog& catalog,
                        const RepairOptions& opts) {
  RepairedDecision r;
  r.q_order = o.q_order;
  if (opts.demand_cover) {
    r.q_order = std::max(r.q_order, std::max(0.0, forecast - s.stock));
  }
  r.mode = o.chosen_mode();

  if (catalog.empty()) {
    r.supplier = o.chosen_supplier();
    r.violation = s.r_supplier < s.r_min || s.lead_actual > s.lead_max;
    return r;
  }

  bool any_feasible = false;
  std::size_t best_feasible = 0;
  std::size_t most_reliable = 0;
  for (std::size_t k = 0; k < catalog.size(); ++k) {
    if (catalog[k].reliability > catalog[most_reliable].reliability) most_reliable = k;
    const bool feasible =
        catalog[k].reliability >= s.r_min && catalog[k].lead_time <= s.lead_max;
    if (!feasible) continue;
    if (!any_feasible || o.supplier_scores[k] > o.supplier_scores[best_feasible]) {
      best_feasible = k;
      any_feasible = true;
    }
  }
  if (any_feasible) {
    r.supplier = best_feasible;
  } else {
    r.supplier = most_reliable;
    r.violation = true;
  }
  return r;
}

DecisionVector cover_decision(double forecast, const SupplyState& s,
                              std::size_t supplier_count) {
  DecisionVector d;
  d.q_order = std::max(0.0, forecast - s.stock);
  d.supplier_scores.assign(std::max<std::size_t>(supplier_count, 1), 0.0);
  // Negated costs make the argmax pick the cheapest mode.
  for (std::size_t m = 0; m < 3; ++m) d.mode_scores[m] = -s.c_trans[m];
  return d;
}

// ---------------------------------------------------------------------------
// StateScaler / DecisionNet
// ---------------------------------------------------------------------------

std::array<double, SupplyState::kFeatureCount> StateScaler::transform(
    const SupplyState& s) const {
  auto f = s.features();
  for (std::size_t i = 0; i < f.size(); ++i) {
    f[i] = range[i] > 0.0 ? (f[i] - offset[i]) / range[i] : 0.0;
  }
  return f;
}

DecisionNet::DecisionNet(DecisionNetConfig cfg, std::uint64_t seed) : cfg_(cfg) {
  if (cfg_.supplier_count == 0) {
    throw std::invalid_argument("DecisionNet: supplier_count must be >= 1");
  }
  std::mt19937_64 rng(seed);
  const std::size_t in = 1 + SupplyState::kFeatureCount;
  const std::size_t h1 = cfg_.hidden[0];
  const std::size_t h2 = cfg_.hidden[1];
  w1_ = init_tensor({h1, in}, in, rng);
  b1_ = ad::Tensor::zeros({h1});
  w2_ = init_tensor({h2, h1}, h1, rng);
  b2_ = ad::Tensor::zeros({h2});
  wq_ = init_tensor({1, h2}, h2, rng);
  bq_ = ad::Tensor::zeros({1});
  wsup_ = init_tensor({cfg_.supplier_count, h2}, h2, rng);
  bsup_ = ad::Tensor::zeros({cfg_.supplier_count});
  wmode_ = init_tensor({3, h2}, h2, rng);
  bmode_ = ad::Tensor::zeros({3});
}

DecisionNet::Nodes DecisionNet::forward_nodes(const ad::Tensor& forecast,
                                              const SupplyState& s,
                                              std::mt19937_64* dropout_rng) const {
  if (forecast.numel() != 1) {
    throw std::invalid_argument("DecisionNet: forecast must be scalar");
  }
  if (!forecast.finite()) {
    throw NumericError("DecisionNet: non-finite forecast input");
  }
  auto feats = scaler_.transform(s);
  for (double v : feats) {
    if (!std::isfinite(v)) throw NumericError("DecisionNet: non-finite state input");
  }
  ad::Tensor state_in = ad::Tensor::vector({feats.begin(), feats.end()});
  ad::Tensor x = ad::concat({forecast, state_in});

  ad::Tensor h1 = ad::relu(ad::add(ad::matmul(w1_, x), b1_));
  if (dropout_rng != nullptr && cfg_.dropout > 0.0) {
    std::bernoulli_distribution keep(1.0 - cfg_.dropout);
    ad::Tensor mask = ad::Tensor::zeros({cfg_.hidden[0]});
    const double inv_keep = 1.0 / (1.0 - cfg_.dropout);
    for (auto& v : mask.values) v = keep(*dropout_rng) ? inv_keep : 0.0;
    h1 = ad::mul(h1, mask);
  }
  ad::Tensor h2 = ad::relu(ad::add(ad::matmul(w2_, h1), b2_));

  Nodes out;
  out.q_order = ad::softplus(ad::add(ad::matmul(wq_, h2), bq_));
  out.supplier_scores = ad::add(ad::matmul(wsup_, h2), bsup_);
  out.mode_scores = ad::add(ad::matmul(wmode_, h2), bmode_);
  return out;
}

DecisionVector DecisionNet::forward(double forecast, const SupplyState& s) const {
  ad::Tape tape;
  ad::TapeScope scope(tape);
  Nodes n = forward_nodes(ad::Tensor::scalar(forecast), s, nullptr);
  DecisionVector d;
  d.q_order = n.q_order.values[0];
  d.supplier_scores = n.supplier_scores.values;
  std::copy_n(n.mode_scores.values.begin(), 3, d.mode_scores.begin());
  return d;
}

std::vector<std::pair<std::string, ad::Tensor*>> DecisionNet::params() {
  return {{"decision.w1", &w1_},     {"decision.b1", &b1_},
          {"decision.w2", &w2_},     {"decision.b2", &b2_},
          {"decision.wq", &wq_},     {"decision.bq", &bq_},
          {"decision.wsup", &wsup_}, {"decision.bsup", &bsup_},
          {"decision.wmode", &wmode_}, {"decision.bmode", &bmode_}};
}

std::size_t DecisionNet::param_count() const {
  return w1_.numel() + b1_.numel() + w2_.numel() + b2_.numel() + wq_.numel() +
         bq_.numel() + wsup_.numel() + bsup_.numel() + wmode_.numel() + bmode_.numel();
}

// ---------------------------------------------------------------------------
// Differentiable objective
// ---------------------------------------------------------------------------

SupplyLossNodes supply_loss_nodes(const DecisionNet& net, const ad::Tensor& forecast,
                                  const SupplyState& state_raw, double stock,
                                  double realized_demand, const CostParams& p,
                                  const SupplierCatalog& catalog,
                                  std::mt19937_64* dropout_rng) {
  p.validate();
  const std::size_t n_sup = catalog.empty() ? 1 : catalog.size();
  if (n_sup != net.config().supplier_count) {
    throw std::invalid_argument("supply_loss_nodes: catalog size " +
                                std::to_string(n_sup) + " does not match network head " +
                                std::to_string(net.config().supplier_count));
  }

  DecisionNet::Nodes o = net.forward_nodes(forecast, state_raw, dropout_rng);
  ad::Tensor q = ad::as_scalar(o.q_order);
  ad::Tensor f = ad::as_scalar(forecast);

  // Exact per-unit accounting with soft transport-mode selection.
  ad::Tensor c_prod = ad::scale(q, state_raw.c_prod);
  ad::Tensor cover = ad::add_const(q, stock - realized_demand);
  ad::Tensor c_inv = ad::scale(ad::hinge(cover), state_raw.c_hold);
  ad::Tensor c_short =
      ad::scale(ad::hinge(ad::add_const(ad::scale(q, -1.0), realized_demand - stock)),
                state_raw.c_short);
  ad::Tensor mode_w = ad::softmax(o.mode_scores);
  ad::Tensor c_trans_unit = ad::dot(
      mode_w, ad::Tensor::vector({state_raw.c_trans[0], state_raw.c_trans[1],
                                  state_raw.c_trans[2]}));
  ad::Tensor c_trans = ad::mul(c_trans_unit, q);
  ad::Tensor c_total = ad::add(ad::add(c_prod, c_inv), ad::add(c_trans, c_short));

  // Smooth service-level surrogate.
  ad::Tensor sl = ad::sigmoid(ad::scale(cover, 1.0 / p.smooth_tau));
  ad::Tensor service_term = ad::scale(ad::sub(ad::Tensor::scalar(1.0), sl), p.beta);

  // Constraint penalties; reliability uses the soft supplier weights.
  ad::Tensor demand_gap = ad::hinge(ad::sub(f, ad::add_const(q, stock)));
  ad::Tensor penalty = ad::scale(demand_gap, p.rho_demand);
  const double lead_pen =
      p.rho_lead * std::max(0.0, state_raw.lead_actual - state_raw.lead_max);
  penalty = ad::add_const(penalty, lead_pen);
  std::vector<double> rel_gaps(n_sup);
  for (std::size_t k = 0; k < n_sup; ++k) {
    const double r = catalog.empty() ? state_raw.r_supplier : catalog[k].reliability;
    rel_gaps[k] = std::max(0.0, state_raw.r_min - r);
  }
  ad::Tensor sup_w = ad::softmax(o.supplier_scores);
  ad::Tensor rel_pen = ad::scale(ad::dot(sup_w, ad::Tensor::vector(rel_gaps)), p.rho_rel);
  penalty = ad::add(penalty, rel_pen);

  SupplyLossNodes out;
  out.loss = ad::add(ad::add(ad::scale(c_total, p.alpha / p.cost_scale), service_term),
                     penalty);
  out.q_order = o.q_order;
  return out;
}

}  // namespace dsopt
