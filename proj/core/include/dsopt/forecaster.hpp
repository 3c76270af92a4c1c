#pragma once

// Demand forecasting network: embedding lookup for categorical context,
// a stack of recurrent layers over the demand window, a dense relu layer,
// and a linear head for the point forecast (plus an optional softplus head
// for a predictive standard deviation).

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dsopt/autodiff.hpp"

namespace dsopt {

enum class CellKind : std::uint8_t { lstm, rnn, gru };

const char* cell_name(CellKind k);
CellKind cell_from_name(const std::string& name);

// One recurrent layer. The gate weights are packed into a single matrix per
// direction: 4 blocks (input, forget, output, candidate) for LSTM, 3 blocks
// (update, reset, candidate) for GRU, 1 block for the plain relu RNN.
class RecurrentLayer {
 public:
  RecurrentLayer() = default;
  RecurrentLayer(CellKind kind, std::size_t input_size, std::size_t hidden_size,
                 std::mt19937_64& rng);

  struct State {
    ad::Tensor h;
    ad::Tensor c;  // cell state; only meaningful for LSTM
  };

  State initial_state() const;

  // One step of the recurrence. `recurrent_mask` (when non-null) multiplies
  // the hidden state entering the affine maps; the carried state itself is
  // never masked.
  State step(const ad::Tensor& x, const State& prev,
             const ad::Tensor* recurrent_mask = nullptr) const;

  CellKind kind() const { return kind_; }
  std::size_t input_size() const { return input_size_; }
  std::size_t hidden_size() const { return hidden_size_; }

  void collect_params(const std::string& prefix,
                      std::vector<std::pair<std::string, ad::Tensor*>>& out);
  std::size_t param_count() const;

 private:
  CellKind kind_ = CellKind::lstm;
  std::size_t input_size_ = 0;
  std::size_t hidden_size_ = 0;
  ad::Tensor w_in_;   // {gates*H, input}
  ad::Tensor w_rec_;  // {gates*H, H}
  ad::Tensor bias_;   // {gates*H}; LSTM forget block initialized to 1
};

struct ForecasterConfig {
  std::size_t window_len = 30;
  CellKind cell = CellKind::lstm;
  std::vector<std::size_t> hidden{128, 64};
  std::size_t dense_units = 32;
  std::size_t embed_dim = 32;
  std::vector<std::size_t> vocab_sizes;  // one per categorical feature
  double dropout = 0.2;
  bool stochastic_head = false;
};

// Point forecast and predictive std, in normalized demand units.
struct ForecastDistribution {
  double mu = 0.0;
  double sigma = 0.0;  // 0 in deterministic mode
};

// y = mu + sigma * z with z ~ N(0,1) drawn from `rng`; sigma = 0 returns mu.
double sample_forecast(const ForecastDistribution& dist, std::mt19937_64& rng);

class Forecaster {
 public:
  Forecaster(ForecasterConfig cfg, std::uint64_t seed);

  struct Output {
    ad::Tensor mu;     // scalar
    ad::Tensor sigma;  // scalar, softplus-positive; only set when stochastic
    bool stochastic = false;
  };

  // Records the forward pass on the active tape. A non-null rng draws the
  // per-sequence dropout masks (recurrent mask on layer 1, input mask on the
  // deeper layers); pass nullptr for eval.
  Output forward_nodes(const std::vector<double>& window,
                       const std::vector<int>& contexts,
                       std::mt19937_64* dropout_rng = nullptr) const;

  // Eval-mode forward on a scratch tape.
  ForecastDistribution forward(const std::vector<double>& window,
                               const std::vector<int>& contexts) const;

  // Concatenated embedding rows for the given context indices, equal to the
  // one-hot/matrix products.
  ad::Tensor embed_nodes(const std::vector<int>& contexts) const;

  const ForecasterConfig& config() const { return cfg_; }
  std::vector<std::pair<std::string, ad::Tensor*>> params();
  std::size_t param_count() const;

 private:
  ForecasterConfig cfg_;
  std::vector<ad::Tensor> embeddings_;  // {vocab, embed_dim} per feature
  std::vector<RecurrentLayer> layers_;
  ad::Tensor w_dense_, b_dense_;
  ad::Tensor w_mu_, b_mu_;
  ad::Tensor w_sigma_, b_sigma_;  // only allocated with the stochastic head
};

// Mean squared error over a batch of recorded predictions.
ad::Tensor forecast_loss_nodes(const std::vector<ad::Tensor>& predictions,
                               const std::vector<double>& targets);

// Plain MSE in doubles.
double forecast_mse(const std::vector<double>& actuals,
                    const std::vector<double>& predictions);

}  // namespace dsopt
