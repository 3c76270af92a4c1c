#include "dsopt/forecaster.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dsopt {

namespace {

ad::Tensor init_uniform(std::vector<std::size_t> shape, std::size_t fan_in,
                        std::mt19937_64& rng) {
  const double bound =
      1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  ad::Tensor t = ad::Tensor::zeros(std::move(shape));
  for (auto& v : t.values) v = dist(rng);
  return t;
}

std::size_t gate_count(CellKind k) {
  switch (k) {
    case CellKind::lstm: return 4;
    case CellKind::gru: return 3;
    case CellKind::rnn: return 1;
  }
  return 1;
}

ad::Tensor dropout_mask(std::size_t n, double rate, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(1.0 - rate);
  const double inv_keep = 1.0 / (1.0 - rate);
  ad::Tensor mask = ad::Tensor::zeros({n});
  for (auto& v : mask.values) v = keep(rng) ? inv_keep : 0.0;
  return mask;
}

}  // namespace

const char* cell_name(CellKind k) {
  switch (k) {
    case CellKind::lstm: return "lstm";
    case CellKind::rnn: return "rnn";
    case CellKind::gru: return "gru";
  }
  return "?";
}

CellKind cell_from_name(const std::string& name) {
  if (name == "lstm") return CellKind::lstm;
  if (name == "rnn") return CellKind::rnn;
  if (name == "gru") return CellKind::gru;
  throw std::invalid_argument("unknown cell kind '" + name + "'");
}

// ---------------------------------------------------------------------------
// RecurrentLayer
// ---------------------------------------------------------------------------

RecurrentLayer::RecurrentLayer(CellKind kind, std::size_t input_size,
                               std::size_t hidden_size, std::mt19937_64& rng)
    : kind_(kind), input_size_(input_size), hidden_size_(hidden_size) {
  const std::size_t g = gate_count(kind) * hidden_size;
  w_in_ = init_uniform({g, input_size}, input_size, rng);
  w_rec_ = init_uniform({g, hidden_size}, hidden_size, rng);
  bias_ = ad::Tensor::zeros({g});
  if (kind == CellKind::lstm) {
    // Forget-gate block starts open so long-range memory survives early
    // training.
    for (std::size_t i = hidden_size; i < 2 * hidden_size; ++i) bias_.values[i] = 1.0;
  }
}

RecurrentLayer::State RecurrentLayer::initial_state() const {
  State s;
  s.h = ad::Tensor::zeros({hidden_size_});
  if (kind_ == CellKind::lstm) s.c = ad::Tensor::zeros({hidden_size_});
  return s;
}

RecurrentLayer::State RecurrentLayer::step(const ad::Tensor& x, const State& prev,
                                           const ad::Tensor* recurrent_mask) const {
  if (x.numel() != input_size_) {
    throw std::invalid_argument(std::string(cell_name(kind_)) + " step: input size " +
                                std::to_string(x.numel()) + ", expected " +
                                std::to_string(input_size_));
  }
  const std::size_t h = hidden_size_;
  ad::Tensor h_used =
      recurrent_mask != nullptr ? ad::mul(prev.h, *recurrent_mask) : prev.h;

  State next;
  switch (kind_) {
    case CellKind::lstm: {
      ad::Tensor pre = ad::add(ad::add(ad::matmul(w_in_, x), ad::matmul(w_rec_, h_used)),
                               bias_);
      ad::Tensor i = ad::sigmoid(ad::slice(pre, 0, h));
      ad::Tensor f = ad::sigmoid(ad::slice(pre, h, h));
      ad::Tensor o = ad::sigmoid(ad::slice(pre, 2 * h, h));
      ad::Tensor g = ad::tanh(ad::slice(pre, 3 * h, h));
      next.c = ad::add(ad::mul(f, prev.c), ad::mul(i, g));
      next.h = ad::mul(o, ad::tanh(next.c));
      break;
    }
    case CellKind::gru: {
      ad::Tensor in_all = ad::add(ad::matmul(w_in_, x), bias_);
      ad::Tensor rec_all = ad::matmul(w_rec_, h_used);
      ad::Tensor z = ad::sigmoid(
          ad::add(ad::slice(in_all, 0, h), ad::slice(rec_all, 0, h)));
      ad::Tensor r = ad::sigmoid(
          ad::add(ad::slice(in_all, h, h), ad::slice(rec_all, h, h)));
      ad::Tensor rec_n = ad::matmul(w_rec_, ad::mul(r, h_used));
      ad::Tensor n = ad::tanh(
          ad::add(ad::slice(in_all, 2 * h, h), ad::slice(rec_n, 2 * h, h)));
      ad::Tensor one_minus_z = ad::add_const(ad::scale(z, -1.0), 1.0);
      next.h = ad::add(ad::mul(one_minus_z, n), ad::mul(z, prev.h));
      break;
    }
    case CellKind::rnn: {
      ad::Tensor pre = ad::add(ad::add(ad::matmul(w_in_, x), ad::matmul(w_rec_, h_used)),
                               bias_);
      next.h = ad::relu(pre);
      break;
    }
  }
  return next;
}

void RecurrentLayer::collect_params(
    const std::string& prefix, std::vector<std::pair<std::string, ad::Tensor*>>& out) {
  out.emplace_back(prefix + ".w_in", &w_in_);
  out.emplace_back(prefix + ".w_rec", &w_rec_);
  out.emplace_back(prefix + ".b", &bias_);
}

std::size_t RecurrentLayer::param_count() const {
  return w_in_.numel() + w_rec_.numel() + bias_.numel();
}

// ---------------------------------------------------------------------------
// Forecaster
// ---------------------------------------------------------------------------

Forecaster::Forecaster(ForecasterConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  if (cfg_.window_len == 0) {
    throw std::invalid_argument("Forecaster: window length must be >= 1");
  }
  if (cfg_.hidden.empty()) {
    throw std::invalid_argument("Forecaster: at least one recurrent layer required");
  }
  std::mt19937_64 rng(seed);

  for (std::size_t vocab : cfg_.vocab_sizes) {
    if (vocab == 0) throw std::invalid_argument("Forecaster: empty vocabulary");
    embeddings_.push_back(init_uniform({vocab, cfg_.embed_dim}, vocab, rng));
  }

  const std::size_t embed_total = cfg_.vocab_sizes.size() * cfg_.embed_dim;
  std::size_t in = 1 + embed_total;
  for (std::size_t h : cfg_.hidden) {
    layers_.emplace_back(cfg_.cell, in, h, rng);
    in = h;
  }

  w_dense_ = init_uniform({cfg_.dense_units, in}, in, rng);
  b_dense_ = ad::Tensor::zeros({cfg_.dense_units});
  w_mu_ = init_uniform({1, cfg_.dense_units}, cfg_.dense_units, rng);
  b_mu_ = ad::Tensor::zeros({1});
  if (cfg_.stochastic_head) {
    // Drawn after everything else so a deterministic twin built from the same
    // seed shares the exact point-forecast parameters.
    w_sigma_ = init_uniform({1, cfg_.dense_units}, cfg_.dense_units, rng);
    b_sigma_ = ad::Tensor::zeros({1});
  }
}

ad::Tensor Forecaster::embed_nodes(const std::vector<int>& contexts) const {
  if (contexts.size() != embeddings_.size()) {
    throw std::invalid_argument("embed: got " + std::to_string(contexts.size()) +
                                " context indices for " +
                                std::to_string(embeddings_.size()) + " features");
  }
  std::vector<ad::Tensor> rows;
  rows.reserve(contexts.size());
  for (std::size_t j = 0; j < contexts.size(); ++j) {
    const std::size_t vocab = embeddings_[j].shape[0];
    const int idx = contexts[j];
    if (idx < 0 || static_cast<std::size_t>(idx) >= vocab) {
      throw std::invalid_argument("embed: index " + std::to_string(idx) +
                                  " out of range for vocabulary of " +
                                  std::to_string(vocab));
    }
    ad::Tensor onehot = ad::Tensor::zeros({vocab});
    onehot.values[static_cast<std::size_t>(idx)] = 1.0;
    rows.push_back(ad::matmul(onehot, embeddings_[j]));
  }
  if (rows.size() == 1) return rows.front();
  return ad::concat(rows);
}

Forecaster::Output Forecaster::forward_nodes(const std::vector<double>& window,
                                             const std::vector<int>& contexts,
                                             std::mt19937_64* dropout_rng) const {
  if (window.size() != cfg_.window_len) {
    throw std::invalid_argument("Forecaster: window length " +
                                std::to_string(window.size()) + ", expected " +
                                std::to_string(cfg_.window_len));
  }

  const bool has_embed = !embeddings_.empty();
  ad::Tensor emb;
  if (has_embed) emb = embed_nodes(contexts);

  // Per-sequence dropout masks: recurrent mask on the first layer, input
  // masks on the deeper layers.
  std::vector<ad::Tensor> rec_masks(layers_.size());
  std::vector<ad::Tensor> in_masks(layers_.size());
  std::vector<bool> has_rec(layers_.size(), false), has_in(layers_.size(), false);
  if (dropout_rng != nullptr && cfg_.dropout > 0.0) {
    rec_masks[0] = dropout_mask(layers_[0].hidden_size(), cfg_.dropout, *dropout_rng);
    has_rec[0] = true;
    for (std::size_t l = 1; l < layers_.size(); ++l) {
      in_masks[l] = dropout_mask(layers_[l].input_size(), cfg_.dropout, *dropout_rng);
      has_in[l] = true;
    }
  }

  std::vector<RecurrentLayer::State> states;
  states.reserve(layers_.size());
  for (const auto& layer : layers_) states.push_back(layer.initial_state());

  for (std::size_t t = 0; t < cfg_.window_len; ++t) {
    ad::Tensor x = ad::Tensor::vector({window[t]});
    if (has_embed) x = ad::concat({x, emb});
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      if (has_in[l]) x = ad::mul(x, in_masks[l]);
      states[l] = layers_[l].step(x, states[l], has_rec[l] ? &rec_masks[l] : nullptr);
      x = states[l].h;
    }
  }

  ad::Tensor dense = ad::relu(
      ad::add(ad::matmul(w_dense_, states.back().h), b_dense_));

  Output out;
  out.mu = ad::as_scalar(ad::add(ad::matmul(w_mu_, dense), b_mu_));
  if (cfg_.stochastic_head) {
    out.sigma = ad::as_scalar(ad::softplus(ad::add(ad::matmul(w_sigma_, dense), b_sigma_)));
    out.stochastic = true;
  }
  return out;
}

ForecastDistribution Forecaster::forward(const std::vector<double>& window,
                                         const std::vector<int>& contexts) const {
  ad::Tape tape;
  ad::TapeScope scope(tape);
  Output o = forward_nodes(window, contexts, nullptr);
  ForecastDistribution d;
  d.mu = o.mu.values[0];
  d.sigma = o.stochastic ? o.sigma.values[0] : 0.0;
  return d;
}

std::vector<std::pair<std::string, ad::Tensor*>> Forecaster::params() {
  std::vector<std::pair<std::string, ad::Tensor*>> out;
  for (std::size_t j = 0; j < embeddings_.size(); ++j) {
    out.emplace_back("embed." + std::to_string(j), &embeddings_[j]);
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    layers_[l].collect_params(std::string(cell_name(cfg_.cell)) + "." + std::to_string(l),
                              out);
  }
  out.emplace_back("dense.w", &w_dense_);
  out.emplace_back("dense.b", &b_dense_);
  out.emplace_back("head.mu.w", &w_mu_);
  out.emplace_back("head.mu.b", &b_mu_);
  if (cfg_.stochastic_head) {
    out.emplace_back("head.sigma.w", &w_sigma_);
    out.emplace_back("head.sigma.b", &b_sigma_);
  }
  return out;
}

std::size_t Forecaster::param_count() const {
  std::size_t n = 0;
  for (const auto& e : embeddings_) n += e.numel();
  for (const auto& l : layers_) n += l.param_count();
  n += w_dense_.numel() + b_dense_.numel() + w_mu_.numel() + b_mu_.numel();
  if (cfg_.stochastic_head) n += w_sigma_.numel() + b_sigma_.numel();
  return n;
}

// ---------------------------------------------------------------------------
// Losses and sampling
// ---------------------------------------------------------------------------

ad::Tensor forecast_loss_nodes(const std::vector<ad::Tensor>& predictions,
                               const std::vector<double>& targets) {
  if (predictions.empty()) {
    throw std::invalid_argument("forecast_loss: empty batch");
  }
  if (predictions.size() != targets.size()) {
    throw std::invalid_argument("forecast_loss: " + std::to_string(predictions.size()) +
                                " predictions vs " + std::to_string(targets.size()) +
                                " targets");
  }
  std::vector<ad::Tensor> sq;
  sq.reserve(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    sq.push_back(ad::square(ad::add_const(ad::as_scalar(predictions[i]), -targets[i])));
  }
  return sq.size() == 1 ? sq.front() : ad::mean(ad::concat(sq));
}

double forecast_mse(const std::vector<double>& actuals,
                    const std::vector<double>& predictions) {
  if (actuals.empty() || actuals.size() != predictions.size()) {
    throw std::invalid_argument("forecast_mse: empty or mismatched inputs");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < actuals.size(); ++i) {
    const double e = actuals[i] - predictions[i];
    acc += e * e;
  }
  return acc / static_cast<double>(actuals.size());
}

double sample_forecast(const ForecastDistribution& dist, std::mt19937_64& rng) {
  if (dist.sigma < 0.0) {
    throw std::invalid_argument("sample_forecast: sigma must be >= 0");
  }
  if (dist.sigma == 0.0) return dist.mu;
  std::normal_distribution<double> z(0.0, 1.0);
  return dist.mu + dist.sigma * z(rng);
}

}  // namespace dsopt
