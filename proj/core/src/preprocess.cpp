#include "dsopt/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace dsopt {

// ---------------------------------------------------------------------------
// RawTable
// ---------------------------------------------------------------------------

std::size_t RawTable::rows() const {
  return columns.empty() ? 0 : columns.front().size();
}

bool RawTable::has_column(const std::string& name) const {
  for (const auto& c : columns)
    if (c.name == name) return true;
  return false;
}

const Column& RawTable::column(const std::string& name) const {
  for (const auto& c : columns)
    if (c.name == name) return c;
  throw DataError("RawTable: no column named '" + name + "'");
}

Column& RawTable::column(const std::string& name) {
  for (auto& c : columns)
    if (c.name == name) return c;
  throw DataError("RawTable: no column named '" + name + "'");
}

void RawTable::check_rectangular() const {
  const std::size_t n = rows();
  for (const auto& c : columns) {
    if (c.size() != n || c.missing.size() != n) {
      throw DataError("RawTable: column '" + c.name + "' has " +
                      std::to_string(c.size()) + " rows, expected " +
                      std::to_string(n));
    }
  }
}

// ---------------------------------------------------------------------------
// Imputation
// ---------------------------------------------------------------------------

ImputeStats fit_impute(const RawTable& table, std::size_t train_rows) {
  table.check_rectangular();
  train_rows = std::min(train_rows, table.rows());
  ImputeStats stats;
  for (const auto& col : table.columns) {
    if (col.kind == ColumnKind::categorical) {
      std::map<std::string, std::size_t> counts;
      std::vector<std::string> order;
      for (std::size_t i = 0; i < train_rows; ++i) {
        if (col.missing[i]) continue;
        if (counts.emplace(col.labels[i], 0).second) order.push_back(col.labels[i]);
        ++counts[col.labels[i]];
      }
      if (counts.empty()) {
        throw DataError("fit_impute: categorical column '" + col.name +
                        "' has no non-missing training values");
      }
      // Ties resolved toward the first-encountered label.
      std::string best = order.front();
      for (const auto& label : order)
        if (counts[label] > counts[best]) best = label;
      stats.modes[col.name] = best;
    } else {
      double acc = 0.0;
      std::size_t n = 0;
      for (std::size_t i = 0; i < train_rows; ++i) {
        if (col.missing[i]) continue;
        acc += col.reals[i];
        ++n;
      }
      if (n == 0) {
        throw DataError("fit_impute: column '" + col.name +
                        "' has no non-missing training values");
      }
      stats.means[col.name] = acc / static_cast<double>(n);
    }
  }
  return stats;
}

RawTable impute(const RawTable& table, const ImputeStats& stats) {
  table.check_rectangular();
  RawTable out = table;
  for (auto& col : out.columns) {
    const bool categorical = col.kind == ColumnKind::categorical;
    const bool known = categorical ? stats.modes.count(col.name) > 0
                                   : stats.means.count(col.name) > 0;
    bool any_missing = false;
    for (std::size_t i = 0; i < col.size(); ++i) {
      if (!col.missing[i]) continue;
      any_missing = true;
      if (!known) {
        throw DataError("impute: no statistic for column '" + col.name +
                        "' (schema mismatch with fitted stats)");
      }
      if (categorical) {
        col.labels[i] = stats.modes.at(col.name);
      } else {
        col.reals[i] = stats.means.at(col.name);
      }
    }
    if (any_missing) std::fill(col.missing.begin(), col.missing.end(), false);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scaling
// ---------------------------------------------------------------------------

Scaler fit_scaler(const std::vector<double>& train_values) {
  if (train_values.empty()) {
    throw std::invalid_argument("fit_scaler: empty column");
  }
  Scaler s;
  s.min = *std::min_element(train_values.begin(), train_values.end());
  s.max = *std::max_element(train_values.begin(), train_values.end());
  return s;
}

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

int VocabMap::index_of(const std::string& label) const {
  auto it = label_to_index.find(label);
  return it == label_to_index.end() ? 0 : it->second;
}

const std::string& VocabMap::label_of(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= index_to_label.size()) {
    throw std::invalid_argument("VocabMap: index " + std::to_string(index) +
                                " out of range");
  }
  return index_to_label[static_cast<std::size_t>(index)];
}

std::pair<std::vector<int>, VocabMap> encode_categories(
    const std::vector<std::string>& column) {
  VocabMap vocab;
  std::vector<int> indices;
  indices.reserve(column.size());
  for (const auto& label : column) {
    auto it = vocab.label_to_index.find(label);
    if (it == vocab.label_to_index.end()) {
      const int idx = static_cast<int>(vocab.index_to_label.size());
      vocab.index_to_label.push_back(label);
      it = vocab.label_to_index.emplace(label, idx).first;
    }
    indices.push_back(it->second);
  }
  return {std::move(indices), std::move(vocab)};
}

std::vector<int> encode_with_vocab(const std::vector<std::string>& column,
                                   const VocabMap& vocab) {
  std::vector<int> indices;
  indices.reserve(column.size());
  for (const auto& label : column) indices.push_back(vocab.index_of(label));
  return indices;
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

SplitSpec make_split_spec(std::size_t total, std::array<double, 3> fractions) {
  double sum = 0.0;
  for (double f : fractions) {
    if (f < 0.0) throw std::invalid_argument("make_split_spec: negative fraction");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("make_split_spec: fractions sum to " +
                                std::to_string(sum) + ", expected 1");
  }
  SplitSpec spec;
  spec.t_total = total;
  spec.fractions = fractions;
  const double t = static_cast<double>(total);
  // The tiny nudge compensates binary representation of the fractions so the
  // boundary matches the exact-arithmetic floor.
  spec.train_end = static_cast<std::size_t>(std::floor(fractions[0] * t + 1e-9));
  spec.val_end =
      static_cast<std::size_t>(std::floor((fractions[0] + fractions[1]) * t + 1e-9));
  spec.train_end = std::min(spec.train_end, total);
  spec.val_end = std::min(std::max(spec.val_end, spec.train_end), total);
  return spec;
}

// ---------------------------------------------------------------------------
// Windowing
// ---------------------------------------------------------------------------

std::vector<Sample> make_windows(const std::vector<double>& series,
                                 std::size_t window_len,
                                 const std::vector<std::vector<int>>& contexts,
                                 const std::vector<SupplyState>& states) {
  const std::size_t t = series.size();
  if (window_len == 0) throw std::invalid_argument("make_windows: window length 0");
  if (t < window_len + 1) {
    throw std::invalid_argument("make_windows: series too short (" +
                                std::to_string(t) + " < " +
                                std::to_string(window_len + 1) + ")");
  }
  for (const auto& feature : contexts) {
    if (feature.size() != t) {
      throw std::invalid_argument("make_windows: context length mismatch");
    }
  }
  if (!states.empty() && states.size() != t) {
    throw std::invalid_argument("make_windows: state trace length mismatch");
  }

  std::vector<Sample> samples;
  samples.reserve(t - window_len);
  for (std::size_t start = 0; start + window_len < t; ++start) {
    Sample s;
    s.window.assign(series.begin() + static_cast<std::ptrdiff_t>(start),
                    series.begin() + static_cast<std::ptrdiff_t>(start + window_len));
    s.target = series[start + window_len];
    const std::size_t end = start + window_len - 1;
    for (const auto& feature : contexts) s.contexts.push_back(feature[end]);
    if (!states.empty()) s.state = states[end];
    s.window_start = start;
    samples.push_back(std::move(s));
  }
  return samples;
}

SplitReport chrono_split(std::vector<Sample>& samples, std::size_t series_len,
                         std::array<double, 3> fractions) {
  SplitReport report;
  report.spec = make_split_spec(series_len, fractions);
  const std::size_t b1 = report.spec.train_end;
  const std::size_t b2 = report.spec.val_end;

  for (auto& s : samples) {
    const std::size_t first = s.window_start;
    const std::size_t last = s.window_start + s.window.size();  // target index
    if (last < b1) {
      s.split = Split::train;
      ++report.counts[0];
    } else if (first >= b1 && last < b2) {
      s.split = Split::val;
      ++report.counts[1];
    } else if (first >= b2 && last < series_len) {
      s.split = Split::test;
      ++report.counts[2];
    } else {
      s.split = Split::dropped;
      ++report.dropped;
    }
  }
  for (std::size_t i = 0; i < 3; ++i) report.empty[i] = report.counts[i] == 0;
  return report;
}

// ---------------------------------------------------------------------------
// Augmentation
// ---------------------------------------------------------------------------

std::size_t augment_gaussian(std::vector<Sample>& samples, const AugmentConfig& cfg,
                             const SupplyState& train_mean_state) {
  if (cfg.noise_std < 0.0) {
    throw std::invalid_argument("augment_gaussian: noise_std must be >= 0");
  }
  if (cfg.supplier_dropout < 0.0 || cfg.supplier_dropout >= 1.0) {
    throw std::invalid_argument("augment_gaussian: supplier_dropout must lie in [0,1)");
  }
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, cfg.noise_std);
  std::bernoulli_distribution drop(cfg.supplier_dropout);

  std::vector<Sample> copies;
  for (const auto& s : samples) {
    if (s.split != Split::train) continue;
    Sample c = s;
    c.augmented = true;
    if (cfg.noise_std > 0.0) {
      for (auto& v : c.window) v += noise(rng);
      c.target += noise(rng);
    }
    if (cfg.supplier_dropout > 0.0 && drop(rng)) {
      c.state = train_mean_state;
    }
    copies.push_back(std::move(c));
  }
  samples.insert(samples.end(), std::make_move_iterator(copies.begin()),
                 std::make_move_iterator(copies.end()));
  return copies.size();
}

std::size_t drop_supplier_records(RawTable& table,
                                  const std::vector<std::string>& supplier_columns,
                                  double rate, std::uint64_t seed,
                                  const ImputeStats& stats) {
  if (rate < 0.0 || rate >= 1.0) {
    throw std::invalid_argument("drop_supplier_records: rate must lie in [0,1)");
  }
  table.check_rectangular();
  if (rate == 0.0) return 0;

  std::mt19937_64 rng(seed);
  std::bernoulli_distribution drop(rate);
  std::vector<Column*> cols;
  for (const auto& name : supplier_columns) cols.push_back(&table.column(name));

  std::size_t hit = 0;
  for (std::size_t row = 0; row < table.rows(); ++row) {
    if (!drop(rng)) continue;
    ++hit;
    for (Column* c : cols) c->missing[row] = true;
  }
  if (hit > 0) table = impute(table, stats);
  return hit;
}

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

std::vector<std::size_t> WindowedDataset::indices_of(Split s) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].split == s) idx.push_back(i);
  return idx;
}

std::size_t WindowedDataset::count_of(Split s) const {
  std::size_t n = 0;
  for (const auto& sample : samples)
    if (sample.split == s) ++n;
  return n;
}

std::array<double, SupplyState::kFeatureCount> WindowedDataset::state_inputs(
    const Sample& s) const {
  return state_scaler.transform(s.state);
}

WindowedDataset assemble_dataset(const SeriesBundle& bundle,
                                 const PipelineOptions& options) {
  const std::size_t t = bundle.demand.size();
  if (t < options.window_len + 2) {
    throw std::invalid_argument("assemble_dataset: series of length " +
                                std::to_string(t) + " cannot host window " +
                                std::to_string(options.window_len) + " plus a target");
  }
  for (const auto& feature : bundle.context_labels) {
    if (feature.size() != t) {
      throw std::invalid_argument("assemble_dataset: context feature length mismatch");
    }
  }
  if (!bundle.states.empty() && bundle.states.size() != t) {
    throw std::invalid_argument("assemble_dataset: state trace length mismatch");
  }

  WindowedDataset ds;
  ds.window_len = options.window_len;
  ds.series = bundle;

  const SplitSpec spec = make_split_spec(t, options.fractions);
  const std::size_t train_end = std::max<std::size_t>(spec.train_end, 1);

  // All statistics come from the training time range only.
  std::vector<double> train_demand(bundle.demand.begin(),
                                   bundle.demand.begin() +
                                       static_cast<std::ptrdiff_t>(train_end));
  ds.demand_scaler = fit_scaler(train_demand);

  std::vector<std::vector<int>> contexts;
  for (const auto& feature : bundle.context_labels) {
    std::vector<std::string> train_slice(feature.begin(),
                                         feature.begin() +
                                             static_cast<std::ptrdiff_t>(train_end));
    auto [_, vocab] = encode_categories(train_slice);
    contexts.push_back(encode_with_vocab(feature, vocab));
    ds.vocabs.push_back(std::move(vocab));
  }

  if (!bundle.states.empty()) {
    for (std::size_t f = 0; f < SupplyState::kFeatureCount; ++f) {
      double lo = bundle.states[0].features()[f];
      double hi = lo;
      for (std::size_t i = 1; i < train_end; ++i) {
        const double v = bundle.states[i].features()[f];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      ds.state_scaler.offset[f] = lo;
      ds.state_scaler.range[f] = hi - lo;  // transform maps a constant field to 0
    }
  }

  std::vector<double> normalized(t);
  for (std::size_t i = 0; i < t; ++i)
    normalized[i] = ds.demand_scaler.transform(bundle.demand[i]);

  ds.samples = make_windows(normalized, options.window_len, contexts, bundle.states);
  ds.split = chrono_split(ds.samples, t, options.fractions);

  if (options.augment) {
    SupplyState mean_state;
    if (!bundle.states.empty()) {
      std::array<double, SupplyState::kFeatureCount> acc{};
      for (std::size_t i = 0; i < train_end; ++i) {
        auto f = bundle.states[i].features();
        for (std::size_t j = 0; j < f.size(); ++j) acc[j] += f[j];
      }
      for (auto& v : acc) v /= static_cast<double>(train_end);
      mean_state = SupplyState::from_features(acc);
    }
    augment_gaussian(ds.samples, options.augment_cfg, mean_state);
  }
  return ds;
}

}  // namespace dsopt
