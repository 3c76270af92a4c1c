#include "doctest.h"

#include <cmath>
#include <random>

#include "dsopt/preprocess.hpp"
#include "testutil.hpp"

using namespace dsopt;

namespace {

RawTable small_table() {
  RawTable t;
  Column qty;
  qty.name = "quantity";
  qty.kind = ColumnKind::continuous;
  qty.reals = {1.0, 0.0, 3.0};
  qty.missing = {false, true, false};
  Column color;
  color.name = "color";
  color.kind = ColumnKind::categorical;
  color.labels = {"A", "A", "B"};
  color.missing = {false, false, false};
  t.columns = {qty, color};
  return t;
}

}  // namespace

TEST_SUITE("preprocess") {

TEST_CASE("mean and mode imputation") {
  RawTable t = small_table();
  ImputeStats stats = fit_impute(t, t.rows());
  CHECK(stats.means.at("quantity") == doctest::Approx(2.0));
  CHECK(stats.modes.at("color") == "A");

  RawTable filled = impute(t, stats);
  CHECK(filled.column("quantity").reals == std::vector<double>{1.0, 2.0, 3.0});

  SUBCASE("categorical missing goes to the mode") {
    RawTable t2 = small_table();
    t2.column("color").labels.push_back("?");
    t2.column("color").missing.push_back(true);
    t2.column("quantity").reals.push_back(4.0);
    t2.column("quantity").missing.push_back(false);
    RawTable filled2 = impute(t2, fit_impute(t2, t2.rows()));
    CHECK(filled2.column("color").labels.back() == "A");
  }

  SUBCASE("table without missing cells is unchanged") {
    RawTable clean = impute(small_table(), stats);
    RawTable again = impute(clean, stats);
    CHECK(again.column("quantity").reals == clean.column("quantity").reals);
    CHECK(again.column("color").labels == clean.column("color").labels);
  }

  SUBCASE("all-missing column is an error") {
    RawTable bad = small_table();
    bad.column("quantity").missing = {true, true, true};
    CHECK_THROWS_AS(fit_impute(bad, bad.rows()), DataError);
  }

  SUBCASE("schema mismatch is an error") {
    RawTable other;
    Column c;
    c.name = "unknown_col";
    c.kind = ColumnKind::continuous;
    c.reals = {1.0};
    c.missing = {true};
    other.columns = {c};
    CHECK_THROWS_AS(impute(other, stats), DataError);
  }
}

TEST_CASE("min-max scaler") {
  Scaler s = fit_scaler({2.0, 4.0, 6.0});
  CHECK(s.transform(2.0) == 0.0);
  CHECK(s.transform(4.0) == 0.5);
  CHECK(s.transform(6.0) == 1.0);
  // Out-of-range values are not clipped.
  CHECK(s.transform(8.0) == doctest::Approx(1.5));

  SUBCASE("round trip within 1e-9") {
    std::mt19937_64 rng(3);
    auto vals = testutil::random_vector(rng, 50, -10.0, 25.0);
    Scaler r = fit_scaler(vals);
    for (double v : vals) {
      CHECK(std::abs(r.inverse(r.transform(v)) - v) < 1e-9);
    }
  }

  SUBCASE("constant column maps to zero") {
    Scaler c = fit_scaler({5.0, 5.0, 5.0});
    CHECK(c.transform(5.0) == 0.0);
    CHECK(c.transform(7.0) == 0.0);
  }

  SUBCASE("empty column is an error") {
    CHECK_THROWS_AS(fit_scaler({}), std::invalid_argument);
  }
}

TEST_CASE("categorical encoding") {
  auto [indices, vocab] = encode_categories({"red", "blue", "red"});
  CHECK(indices == std::vector<int>{1, 2, 1});
  CHECK(vocab.size() == 3);
  CHECK(vocab.label_of(0) == "<unknown>");
  CHECK(vocab.label_of(1) == "red");
  CHECK(vocab.label_of(2) == "blue");

  // Unseen label maps to the reserved unknown index.
  CHECK(vocab.index_of("green") == 0);

  // Round trip for known labels.
  for (const char* label : {"red", "blue"}) {
    CHECK(vocab.label_of(vocab.index_of(label)) == label);
  }

  VocabMap empty;
  CHECK(empty.index_of("anything") == 0);
}

TEST_CASE("sliding windows") {
  const std::vector<double> series{1, 2, 3, 4, 5};
  auto samples = make_windows(series, 3, {}, {});
  REQUIRE(samples.size() == 2);
  CHECK(samples[0].window == std::vector<double>{1, 2, 3});
  CHECK(samples[0].target == 4);
  CHECK(samples[1].window == std::vector<double>{2, 3, 4});
  CHECK(samples[1].target == 5);

  SUBCASE("boundary: T = L + 1 gives one sample") {
    std::vector<double> s31(31, 1.0);
    CHECK(make_windows(s31, 30, {}, {}).size() == 1);
  }
  SUBCASE("T = L is too short") {
    std::vector<double> s30(30, 1.0);
    CHECK_THROWS_AS(make_windows(s30, 30, {}, {}), std::invalid_argument);
  }
  SUBCASE("window count is exactly T - L for 1 <= T <= 60") {
    const std::size_t window = 5;
    for (std::size_t t = 1; t <= 60; ++t) {
      std::vector<double> s(t, 1.0);
      if (t < window + 1) {
        CHECK_THROWS_AS(make_windows(s, window, {}, {}), std::invalid_argument);
      } else {
        CHECK(make_windows(s, window, {}, {}).size() == t - window);
      }
    }
  }
  SUBCASE("target timestamp is window end + 1") {
    for (const auto& s : samples) {
      CHECK(s.window_start + 3 < series.size());
      CHECK(s.target == series[s.window_start + 3]);
    }
  }
}

TEST_CASE("chronological split boundaries follow the floor rule") {
  SplitSpec spec100 = make_split_spec(100, {0.70, 0.15, 0.15});
  CHECK(spec100.train_end == 70);
  CHECK(spec100.val_end == 85);

  SplitSpec spec10 = make_split_spec(10, {0.70, 0.15, 0.15});
  CHECK(spec10.train_end == 7);
  CHECK(spec10.val_end == 8);

  SUBCASE("degenerate empty test split is valid and flagged") {
    std::vector<double> series(40);
    for (std::size_t i = 0; i < series.size(); ++i) series[i] = double(i);
    auto samples = make_windows(series, 4, {}, {});
    SplitReport rep = chrono_split(samples, series.size(), {0.5, 0.5, 0.0});
    CHECK(rep.empty[2]);
    CHECK(rep.counts[2] == 0);
  }

  SUBCASE("bad fraction sum rejected") {
    CHECK_THROWS_AS(make_split_spec(10, {0.5, 0.3, 0.1}), std::invalid_argument);
  }

  SUBCASE("samples crossing a boundary are dropped, never reassigned") {
    std::vector<double> series(100, 0.0);
    auto samples = make_windows(series, 10, {}, {});
    SplitReport rep = chrono_split(samples, 100, {0.70, 0.15, 0.15});
    std::size_t labeled = rep.counts[0] + rep.counts[1] + rep.counts[2];
    CHECK(labeled + rep.dropped == samples.size());
    for (const auto& s : samples) {
      const std::size_t first = s.window_start;
      const std::size_t last = s.window_start + 10;
      if (s.split == Split::train) CHECK(last < 70);
      if (s.split == Split::val) {
        CHECK(first >= 70);
        CHECK(last < 85);
      }
      if (s.split == Split::test) CHECK(first >= 85);
      if (s.split == Split::dropped) {
        const bool in_train = last < 70;
        const bool in_val = first >= 70 && last < 85;
        const bool in_test = first >= 85;
        CHECK(!(in_train || in_val || in_test));
      }
    }
  }
}

TEST_CASE("gaussian augmentation") {
  auto make_samples = [](std::size_t n) {
    std::vector<Sample> samples(n);
    for (std::size_t i = 0; i < n; ++i) {
      samples[i].window = {0.5};
      samples[i].target = 0.25;
      samples[i].split = Split::train;
    }
    return samples;
  };

  SUBCASE("sigma zero clones exactly") {
    auto samples = make_samples(3);
    samples[1].split = Split::val;
    AugmentConfig cfg;
    cfg.noise_std = 0.0;
    cfg.seed = 9;
    std::size_t added = augment_gaussian(samples, cfg, SupplyState{});
    CHECK(added == 2);  // val sample untouched
    CHECK(samples.back().window[0] == 0.5);
    CHECK(samples.back().target == 0.25);
    CHECK(samples.back().augmented);
  }

  SUBCASE("deterministic under a fixed seed") {
    AugmentConfig cfg;
    cfg.noise_std = 0.05;
    cfg.seed = 42;
    auto a = make_samples(10);
    auto b = make_samples(10);
    augment_gaussian(a, cfg, SupplyState{});
    augment_gaussian(b, cfg, SupplyState{});
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].window[0] == b[i].window[0]);
      CHECK(a[i].target == b[i].target);
    }
  }

  SUBCASE("noise mean over 1e5 draws is near zero") {
    auto samples = make_samples(50000);
    AugmentConfig cfg;
    cfg.noise_std = 0.05;
    cfg.seed = 7;
    augment_gaussian(samples, cfg, SupplyState{});
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto& s : samples) {
      if (!s.augmented) continue;
      acc += s.window[0] - 0.5;
      acc += s.target - 0.25;
      n += 2;
    }
    CHECK(n == 100000);
    CHECK(std::abs(acc / double(n)) < 1e-3);
  }

  SUBCASE("supplier dropout swaps the copy's state for the training mean") {
    auto samples = make_samples(2000);
    SupplyState mark;
    mark.stock = 123.0;
    AugmentConfig cfg;
    cfg.noise_std = 0.0;
    cfg.supplier_dropout = 0.75;
    cfg.seed = 3;
    augment_gaussian(samples, cfg, mark);
    std::size_t swapped = 0, copies = 0;
    for (const auto& s : samples) {
      if (!s.augmented) continue;
      ++copies;
      swapped += s.state.stock == 123.0;
    }
    CHECK(copies == 2000);
    const double frac = double(swapped) / double(copies);
    CHECK(frac > 0.70);
    CHECK(frac < 0.80);
  }

  SUBCASE("validation and test sample counts invariant") {
    auto samples = make_samples(6);
    samples[0].split = Split::val;
    samples[1].split = Split::test;
    AugmentConfig cfg;
    cfg.noise_std = 0.1;
    augment_gaussian(samples, cfg, SupplyState{});
    std::size_t val = 0, test = 0;
    for (const auto& s : samples) {
      val += s.split == Split::val;
      test += s.split == Split::test;
    }
    CHECK(val == 1);
    CHECK(test == 1);
  }
}

TEST_CASE("supplier record dropout") {
  auto make_table = [](std::size_t rows) {
    RawTable t;
    Column lead;
    lead.name = "lead_time";
    lead.kind = ColumnKind::continuous;
    lead.reals.assign(rows, 3.0);
    lead.reals[0] = 5.0;
    lead.missing.assign(rows, false);
    t.columns = {lead};
    return t;
  };

  SUBCASE("rate zero leaves the table unchanged") {
    RawTable t = make_table(10);
    ImputeStats stats = fit_impute(t, t.rows());
    CHECK(drop_supplier_records(t, {"lead_time"}, 0.0, 1, stats) == 0);
    CHECK(t.column("lead_time").reals[0] == 5.0);
  }

  SUBCASE("rate 0.5 over 1e4 rows hits about half") {
    RawTable t = make_table(10000);
    ImputeStats stats = fit_impute(t, t.rows());
    std::size_t hit = drop_supplier_records(t, {"lead_time"}, 0.5, 123, stats);
    const double frac = double(hit) / 10000.0;
    CHECK(frac > 0.48);
    CHECK(frac < 0.52);
    // Hit rows re-imputed; none left missing.
    for (bool m : t.column("lead_time").missing) CHECK(!m);
  }

  SUBCASE("rate 0.99 on 3 rows falls back to imputed values without error") {
    RawTable t = make_table(3);
    ImputeStats stats = fit_impute(t, t.rows());
    drop_supplier_records(t, {"lead_time"}, 0.99, 5, stats);
    for (bool m : t.column("lead_time").missing) CHECK(!m);
  }

  SUBCASE("rate outside [0,1) rejected") {
    RawTable t = make_table(3);
    ImputeStats stats = fit_impute(t, t.rows());
    CHECK_THROWS_AS(drop_supplier_records(t, {"lead_time"}, 1.0, 1, stats),
                    std::invalid_argument);
    CHECK_THROWS_AS(drop_supplier_records(t, {"lead_time"}, -0.1, 1, stats),
                    std::invalid_argument);
  }
}

TEST_CASE("assembled dataset is leakage-free") {
  // Values beyond the training range would change every statistic if leaked.
  SeriesBundle bundle;
  const std::size_t t = 100;
  for (std::size_t i = 0; i < t; ++i) {
    double v = 10.0 + double(i % 7);
    if (i >= 70) v += 100.0;  // test-range level shift
    bundle.demand.push_back(v);
    SupplyState s;
    s.stock = 5.0 + double(i % 3) + (i >= 70 ? 50.0 : 0.0);
    s.c_hold = 0.5;
    s.c_short = 2.0;
    bundle.states.push_back(s);
  }
  bundle.context_labels.push_back({});
  for (std::size_t i = 0; i < t; ++i) {
    bundle.context_labels[0].push_back(i < 70 ? (i % 2 ? "a" : "b") : "zed");
  }

  PipelineOptions opt;
  opt.window_len = 5;
  opt.augment = false;
  WindowedDataset ds = assemble_dataset(bundle, opt);

  // Refit on the training range only and compare bit-exactly.
  std::vector<double> train_demand(bundle.demand.begin(), bundle.demand.begin() + 70);
  Scaler refit = fit_scaler(train_demand);
  CHECK(ds.demand_scaler.min == refit.min);
  CHECK(ds.demand_scaler.max == refit.max);

  std::vector<std::string> train_labels(bundle.context_labels[0].begin(),
                                        bundle.context_labels[0].begin() + 70);
  auto [_, refit_vocab] = encode_categories(train_labels);
  REQUIRE(ds.vocabs.size() == 1);
  CHECK(ds.vocabs[0].index_to_label == refit_vocab.index_to_label);

  // The unseen test-range label encodes to unknown.
  bool saw_unknown = false;
  for (const auto& s : ds.samples) {
    if (s.split == Split::test && s.contexts[0] == 0) saw_unknown = true;
  }
  CHECK(saw_unknown);

  // Every retained sample belongs to exactly one split.
  std::size_t labeled = ds.count_of(Split::train) + ds.count_of(Split::val) +
                        ds.count_of(Split::test) + ds.count_of(Split::dropped);
  CHECK(labeled == ds.samples.size());
}

}  // TEST_SUITE
