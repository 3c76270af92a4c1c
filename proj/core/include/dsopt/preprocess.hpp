#pragma once

// Raw tables -> model-ready windowed datasets: imputation, min-max scaling,
// vocabulary encoding, sliding windows, chronological splits, augmentation.
// Every statistic (means, modes, scaler bounds, vocabularies) is fitted on
// the training prefix only and then applied to the full data.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dsopt/errors.hpp"
#include "dsopt/supply.hpp"

namespace dsopt {

enum class ColumnKind : std::uint8_t { continuous, categorical, date };

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  std::vector<double> reals;          // continuous and date (day number)
  std::vector<std::string> labels;    // categorical
  std::vector<bool> missing;

  std::size_t size() const {
    return kind == ColumnKind::categorical ? labels.size() : reals.size();
  }
};

struct RawTable {
  std::vector<Column> columns;

  std::size_t rows() const;
  bool has_column(const std::string& name) const;
  const Column& column(const std::string& name) const;
  Column& column(const std::string& name);
  void check_rectangular() const;
};

// Train-split means (continuous) and modes (categorical), keyed by column.
struct ImputeStats {
  std::map<std::string, double> means;
  std::map<std::string, std::string> modes;
};

// Fit over the first `train_rows` rows only. A column with every training
// cell missing has no statistic and is reported as an error.
ImputeStats fit_impute(const RawTable& table, std::size_t train_rows);

// Replaces missing cells using `stats`; non-missing cells are untouched.
RawTable impute(const RawTable& table, const ImputeStats& stats);

// Min-max scaler for one column. A constant column maps to 0.0.
struct Scaler {
  double min = 0.0;
  double max = 0.0;

  double transform(double x) const {
    return max > min ? (x - min) / (max - min) : 0.0;
  }
  double inverse(double y) const { return max > min ? y * (max - min) + min : min; }
  double span() const { return max - min; }
};

Scaler fit_scaler(const std::vector<double>& train_values);

// Dense label <-> index bijection; index 0 is reserved for unknown labels.
struct VocabMap {
  std::vector<std::string> index_to_label{"<unknown>"};
  std::unordered_map<std::string, int> label_to_index;

  int index_of(const std::string& label) const;
  const std::string& label_of(int index) const;
  std::size_t size() const { return index_to_label.size(); }
};

// Builds a vocabulary in first-occurrence order and encodes the column.
std::pair<std::vector<int>, VocabMap> encode_categories(
    const std::vector<std::string>& column);
std::vector<int> encode_with_vocab(const std::vector<std::string>& column,
                                   const VocabMap& vocab);

// Chronological boundaries: train ends at floor(f1*T), validation at
// floor((f1+f2)*T). Fractions must be nonnegative and sum to 1.
struct SplitSpec {
  std::size_t t_total = 0;
  std::size_t train_end = 0;  // exclusive
  std::size_t val_end = 0;    // exclusive
  std::array<double, 3> fractions{0.70, 0.15, 0.15};
};

SplitSpec make_split_spec(std::size_t total, std::array<double, 3> fractions);

enum class Split : std::uint8_t { train, val, test, dropped };

struct Sample {
  std::vector<double> window;        // normalized demand
  double target = 0.0;               // normalized demand at window end + 1
  std::vector<int> contexts;         // one index per categorical feature
  SupplyState state;                 // raw units, at window end
  Split split = Split::train;
  std::size_t window_start = 0;      // time index of the first window element
  bool augmented = false;
};

// One window per start position: exactly T - L samples, target = the value
// one step past the window end; contexts and state taken at the window end.
std::vector<Sample> make_windows(const std::vector<double>& series,
                                 std::size_t window_len,
                                 const std::vector<std::vector<int>>& contexts,
                                 const std::vector<SupplyState>& states);

struct SplitReport {
  SplitSpec spec;
  std::array<std::size_t, 3> counts{0, 0, 0};
  std::size_t dropped = 0;
  std::array<bool, 3> empty{false, false, false};
};

// Labels each sample with the split containing its whole [window, target]
// span; samples crossing a boundary are dropped (never reassigned).
SplitReport chrono_split(std::vector<Sample>& samples, std::size_t series_len,
                         std::array<double, 3> fractions);

struct AugmentConfig {
  double noise_std = 0.05;        // in normalized demand units
  double supplier_dropout = 0.0;  // in [0,1)
  std::uint64_t seed = 0;
};

// Appends one perturbed copy of every training sample (the set doubles):
// window and target get i.i.d. Gaussian noise; with probability
// `supplier_dropout` the copy's supply state is replaced by the provided
// training-mean state. Validation/test samples are untouched.
std::size_t augment_gaussian(std::vector<Sample>& samples, const AugmentConfig& cfg,
                             const SupplyState& train_mean_state);

// Marks each row's supply columns missing with probability `rate` and
// re-imputes them from `stats`. Returns the number of rows hit.
std::size_t drop_supplier_records(RawTable& table,
                                  const std::vector<std::string>& supplier_columns,
                                  double rate, std::uint64_t seed,
                                  const ImputeStats& stats);

// ---------------------------------------------------------------------------
// End-to-end assembly
// ---------------------------------------------------------------------------

// Chronological raw inputs, already sorted and joined by the ingestion layer.
struct SeriesBundle {
  std::vector<double> demand;                            // raw units
  std::vector<std::vector<std::string>> context_labels;  // [feature][time]
  std::vector<SupplyState> states;                       // raw units, per time
};

struct PipelineOptions {
  std::size_t window_len = 30;
  std::array<double, 3> fractions{0.70, 0.15, 0.15};
  bool augment = true;
  AugmentConfig augment_cfg;
};

struct WindowedDataset {
  std::size_t window_len = 0;
  std::vector<Sample> samples;
  Scaler demand_scaler;
  StateScaler state_scaler;       // fitted on training-range states
  std::vector<VocabMap> vocabs;   // one per categorical feature
  SplitReport split;
  SeriesBundle series;            // retained for rolling simulation

  std::vector<std::size_t> indices_of(Split s) const;
  std::size_t count_of(Split s) const;
  // Network input features for a sample's state.
  std::array<double, SupplyState::kFeatureCount> state_inputs(const Sample& s) const;
};

WindowedDataset assemble_dataset(const SeriesBundle& bundle,
                                 const PipelineOptions& options);

}  // namespace dsopt
