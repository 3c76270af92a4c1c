#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dsopt/csv.hpp"
#include "dsopt/runner.hpp"
#include "dsopt/synthetic.hpp"

using namespace dsopt;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const std::map<std::string, std::string> kSalesSchema{{"date", "Date"},
                                                      {"quantity", "Qty"}};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("csv ingestion") {
  SUBCASE("well-formed three-row file") {
    const std::string text =
        "Date,Qty\n2021-01-01,5\n2021-01-02,7\n2021-01-03,9\n";
    RawTable t = ingest_csv_text(text, kSalesSchema, sales_roles());
    REQUIRE(t.rows() == 3);
    CHECK(t.column("quantity").reals == std::vector<double>{5, 7, 9});
  }

  SUBCASE("rows are sorted by date") {
    const std::string text =
        "Date,Qty\n2021-01-03,9\n2021-01-01,5\n2021-01-02,7\n";
    RawTable t = ingest_csv_text(text, kSalesSchema, sales_roles());
    CHECK(t.column("quantity").reals == std::vector<double>{5, 7, 9});
    const auto& dates = t.column("date").reals;
    CHECK(std::is_sorted(dates.begin(), dates.end()));
  }

  SUBCASE("duplicate timestamps aggregate quantities by sum") {
    const std::string text =
        "Date,Qty\n2021-01-01,5\n2021-01-01,3\n2021-01-02,7\n";
    RawTable t = ingest_csv_text(text, kSalesSchema, sales_roles());
    REQUIRE(t.rows() == 2);
    CHECK(t.column("quantity").reals == std::vector<double>{8, 7});
  }

  SUBCASE("unparseable cell reports its coordinates") {
    const std::string text = "Date,Qty\n2021-01-01,abc\n";
    CHECK_THROWS_WITH_AS(ingest_csv_text(text, kSalesSchema, sales_roles()),
                         doctest::Contains("row 1"), DataError);
  }

  SUBCASE("empty file rejected") {
    CHECK_THROWS_AS(ingest_csv_text("", kSalesSchema, sales_roles()), DataError);
  }

  SUBCASE("missing column role rejected") {
    const std::string text = "Date,Other\n2021-01-01,1\n";
    CHECK_THROWS_WITH_AS(ingest_csv_text(text, kSalesSchema, sales_roles()),
                         doctest::Contains("missing column"), DataError);
  }

  SUBCASE("quoted fields and missing markers") {
    const std::string text =
        "Date,Qty,Name\n2021-01-01,4,\"a,b\"\n2021-01-02,NA,stub\n";
    std::map<std::string, std::string> schema = kSalesSchema;
    schema["product-id"] = "Name";
    RawTable t = ingest_csv_text(text, schema, sales_roles());
    CHECK(t.column("product-id").labels[0] == "a,b");
    CHECK(t.column("quantity").missing[1]);
  }

  SUBCASE("date formats") {
    CHECK(parse_date("1970-01-01") == 0);
    CHECK(parse_date("1970-01-02") == 1);
    CHECK(parse_date("02-01-1970") == 1);   // DD-MM-YYYY
    CHECK(parse_date("02/01/1970") == 1);   // DD/MM/YYYY
    CHECK_THROWS_AS(parse_date("not a date"), DataError);
  }
}

TEST_CASE("synthetic generation") {
  SUBCASE("zero noise and shocks give an exactly periodic series") {
    SyntheticSpec spec;
    spec.horizon = 60;
    spec.noise_std = 0.0;
    spec.shock_probability = 0.0;
    spec.trend_slope = 0.0;
    spec.seasonal_period = 12;
    auto r = generate_synthetic(spec);
    for (std::size_t t = 0; t + 12 < r.bundle.demand.size(); ++t) {
      CHECK(r.bundle.demand[t] == doctest::Approx(r.bundle.demand[t + 12]).epsilon(1e-12));
    }
    CHECK(r.shock_count == 0);
  }

  SUBCASE("fixed seed reproduces the series") {
    SyntheticSpec spec;
    spec.horizon = 200;
    spec.noise_std = 8.0;
    spec.shock_probability = 0.05;
    spec.shock_magnitude = 40.0;
    spec.seed = 11;
    auto a = generate_synthetic(spec);
    auto b = generate_synthetic(spec);
    CHECK(a.bundle.demand == b.bundle.demand);
    CHECK(a.shock_count == b.shock_count);
  }

  SUBCASE("shock count concentrates around p*T") {
    SyntheticSpec spec;
    spec.horizon = 10000;
    spec.noise_std = 0.0;
    spec.shock_probability = 0.02;
    spec.shock_magnitude = 30.0;
    spec.seed = 5;
    auto r = generate_synthetic(spec);
    CHECK(r.shock_count >= 150);
    CHECK(r.shock_count <= 250);
  }

  SUBCASE("categories shift the level") {
    SyntheticSpec spec;
    spec.horizon = 64;
    spec.noise_std = 0.0;
    spec.seasonal_amplitude = 0.0;
    spec.num_categories = 2;
    spec.category_shift = 20.0;
    spec.category_block = 8;
    auto r = generate_synthetic(spec);
    REQUIRE(r.bundle.context_labels.size() == 1);
    CHECK(r.bundle.demand[0] == doctest::Approx(90.0));   // cat0: -0.5 * 20
    CHECK(r.bundle.demand[8] == doctest::Approx(110.0));  // cat1: +0.5 * 20
    CHECK(r.bundle.context_labels[0][0] == "cat0");
    CHECK(r.bundle.context_labels[0][8] == "cat1");
  }
}

TEST_CASE("config parsing") {
  SUBCASE("defaults mirror the reference architecture and training settings") {
    RunConfig cfg = parse_config("{}");
    CHECK(cfg.pipeline.window_len == 30);
    CHECK(cfg.model.hidden == std::vector<std::size_t>{128, 64});
    CHECK(cfg.model.embed_dim == 32);
    CHECK(cfg.model.dropout == 0.2);
    CHECK(cfg.supply_net.hidden[0] == 64);
    CHECK(cfg.supply_net.hidden[1] == 32);
    CHECK(cfg.supply_net.dropout == 0.3);
    CHECK(cfg.train.learning_rate == 1e-3);
    CHECK(cfg.train.beta1 == 0.9);
    CHECK(cfg.train.beta2 == 0.999);
    CHECK(cfg.train.batch_size == 64);
    CHECK(cfg.train.max_epochs == 100);
    CHECK(cfg.train.patience == 10);
    CHECK(cfg.train.lambda1 == 0.6);
    CHECK(cfg.train.lambda2 == 0.4);
    CHECK(cfg.pipeline.fractions[0] == 0.70);
    CHECK(cfg.evaluate.seeds.size() == 5);
  }

  SUBCASE("unknown keys fail fast") {
    CHECK_THROWS_WITH_AS(parse_config(R"({"trian": {}})"),
                         doctest::Contains("unknown key"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"train": {"lamda1": 0.5}})"),
                         doctest::Contains("unknown key"), ConfigError);
    CHECK_THROWS_AS(parse_config("not json"), ConfigError);
  }

  SUBCASE("dump/parse round trip is stable") {
    RunConfig cfg = parse_config(R"({"train": {"lambda1": 0.8, "seed": 9}})");
    const std::string dumped = dump_config(cfg);
    RunConfig again = parse_config(dumped);
    CHECK(dump_config(again) == dumped);
    CHECK(config_hash(again) == config_hash(cfg));
  }

  SUBCASE("hash ignores output location and workers") {
    RunConfig a = parse_config("{}");
    RunConfig b = parse_config("{}");
    b.out_dir = "elsewhere";
    b.workers = 7;
    CHECK(config_hash(a) == config_hash(b));
  }

  SUBCASE("supplier catalog") {
    RunConfig cfg = parse_config(
        R"({"cost": {"suppliers": [{"name": "a", "reliability": 0.9, "lead_time": 2}]}})");
    REQUIRE(cfg.catalog.size() == 1);
    CHECK(cfg.catalog[0].name == "a");
  }
}

TEST_CASE("runner commands and determinism") {
  const std::string config_text = R"({
    "dataset": {"kind": "synthetic",
      "synthetic": {"horizon": 120, "noise_std": 5.0, "seed": 3,
                     "num_categories": 2, "category_shift": 15.0,
                     "states": {"lead_time": [0, 0]}}},
    "preprocess": {"window": 8},
    "model": {"hidden": [6], "dense_units": 4, "embed_dim": 2, "dropout": 0.0},
    "supply_net": {"hidden": [5, 3]},
    "train": {"batch_size": 16, "max_epochs": 3, "patience": 3,
               "learning_rate": 0.01, "seed": 2},
    "evaluate": {"seeds": [1]}
  })";

  const fs::path base = fs::temp_directory_path() / "dsopt_cli_test";
  fs::remove_all(base);

  SUBCASE("synth writes the generated tables") {
    RunConfig cfg = parse_config(config_text);
    cfg.out_dir = (base / "synth").string();
    run_command("synth", cfg);
    CHECK(fs::exists(base / "synth" / "sales.csv"));
    CHECK(fs::exists(base / "synth" / "supply.csv"));
    CHECK(fs::exists(base / "synth" / "config.json"));
  }

  SUBCASE("unknown subcommand is a config error") {
    RunConfig cfg = parse_config(config_text);
    cfg.out_dir = (base / "bad").string();
    CHECK_THROWS_AS(run_command("frobnicate", cfg), ConfigError);
  }

  SUBCASE("identical config and seed reproduce identical bytes") {
    RunConfig cfg = parse_config(config_text);
    cfg.out_dir = (base / "a").string();
    run_command("train", cfg);
    cfg.out_dir = (base / "b").string();
    run_command("train", cfg);
    for (const char* name :
         {"config.json", "history_phase1.csv", "history_phase2.csv",
          "forecaster.ckpt", "decision.ckpt", "train_summary.json"}) {
      CAPTURE(name);
      CHECK(slurp(base / "a" / name) == slurp(base / "b" / name));
    }
  }

  SUBCASE("csv dataset round trip through generated tables") {
    RunConfig cfg = parse_config(config_text);
    cfg.out_dir = (base / "roundtrip").string();
    run_command("synth", cfg);

    RunConfig csv_cfg = parse_config(config_text);
    csv_cfg.dataset.kind = "csv";
    csv_cfg.dataset.sales_csv = (base / "roundtrip" / "sales.csv").string();
    csv_cfg.dataset.sales_schema = {{"date", "date"},
                                    {"quantity", "quantity"},
                                    {"product-id", "category"}};
    csv_cfg.dataset.supply_csv = (base / "roundtrip" / "supply.csv").string();
    csv_cfg.dataset.supply_schema = {
        {"date", "date"},
        {"stock-level", "stock_level"},
        {"lead-time", "lead_time"},
        {"lead-time-max", "lead_time_max"},
        {"reliability", "reliability"},
        {"reliability-min", "reliability_min"},
        {"defect-rate", "defect_rate"},
        {"unit-cost-production", "unit_cost_production"},
        {"unit-cost-holding", "unit_cost_holding"},
        {"unit-cost-transport-0", "unit_cost_transport_0"},
        {"unit-cost-transport-1", "unit_cost_transport_1"},
        {"unit-cost-transport-2", "unit_cost_transport_2"},
        {"unit-cost-shortage", "unit_cost_shortage"}};
    csv_cfg.dataset.context_features = {"product-id"};

    SeriesBundle direct = build_bundle(cfg);
    SeriesBundle via_csv = build_bundle(csv_cfg);
    REQUIRE(via_csv.demand.size() == direct.demand.size());
    for (std::size_t i = 0; i < direct.demand.size(); ++i) {
      // CSV cells carry %.17g doubles, so the round trip is bit-exact.
      CHECK(via_csv.demand[i] == direct.demand[i]);
      CHECK(via_csv.states[i].stock == direct.states[i].stock);
      CHECK(via_csv.states[i].c_short == direct.states[i].c_short);
    }
    REQUIRE(via_csv.context_labels.size() == 1);
    CHECK(via_csv.context_labels[0] == direct.context_labels[0]);

    // The ingested bundle feeds the pipeline end to end.
    csv_cfg.out_dir = (base / "roundtrip_pre").string();
    run_command("preprocess", csv_cfg);
    CHECK(fs::exists(base / "roundtrip_pre" / "dataset_summary.json"));
  }

  SUBCASE("gradcheck artifact reports a pass") {
    RunConfig cfg = parse_config(config_text);
    cfg.out_dir = (base / "g").string();
    run_command("gradcheck", cfg);
    const std::string text = slurp(base / "g" / "gradcheck.json");
    CHECK(text.find("\"passed\": true") != std::string::npos);
  }

  SUBCASE("gradcheck passes for the rnn and gru cell variants") {
    for (const char* cell : {"rnn", "gru"}) {
      RunConfig cfg = parse_config(config_text);
      cfg.model.cell = cell_from_name(cell);
      cfg.out_dir = (base / (std::string("g_") + cell)).string();
      CHECK_NOTHROW(run_command("gradcheck", cfg));
    }
  }

  SUBCASE("rerunning the echoed config reproduces identical bytes") {
    RunConfig cfg = parse_config(config_text);
    cfg.out_dir = (base / "echo_a").string();
    run_command("train", cfg);

    RunConfig echoed = load_config((base / "echo_a" / "config.json").string());
    echoed.out_dir = (base / "echo_b").string();
    run_command("train", echoed);
    for (const char* name : {"config.json", "history_phase2.csv",
                             "forecaster.ckpt", "decision.ckpt"}) {
      CAPTURE(name);
      CHECK(slurp(base / "echo_a" / name) == slurp(base / "echo_b" / name));
    }
  }

  fs::remove_all(base);
}

#ifdef DSOPT_CLI_PATH
TEST_CASE("binary exit codes") {
  auto run = [](const std::string& args) {
    const std::string cmd = std::string(DSOPT_CLI_PATH) + " " + args +
                            " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  };
  CHECK(run("definitely-not-a-subcommand") == 1);          // usage
  CHECK(run("train --config /no/such/config.json") == 1);  // config
  const fs::path dir = fs::temp_directory_path() / "dsopt_exitcode_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "csv.json");
    cfg << R"({"dataset": {"kind": "csv", "sales_csv": ")" << (dir / "missing.csv").string()
        << R"(", "sales_schema": {"date": "d", "quantity": "q"}}})";
  }
  CHECK(run("preprocess --config " + (dir / "csv.json").string() + " --out " +
            (dir / "out").string()) == 2);  // data
  fs::remove_all(dir);
}
#endif

}  // TEST_SUITE
