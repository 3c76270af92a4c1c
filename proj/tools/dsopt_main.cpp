// dsopt: demand forecasting + replenishment optimization, trained jointly.
//
// dsopt <subcommand> [--config run.json] [--seed N] [--out DIR] [--workers N]
//       [--cell lstm|rnn|gru] [--detach] [--stochastic-head]
//
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric failure.

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "dsopt/runner.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  std::string cell;
  long long seed = -1;
  int workers = 0;
  bool detach = false;
  bool stochastic = false;
};

dsopt::RunConfig resolve_config(const CliOptions& opts) {
  dsopt::RunConfig cfg = opts.config_path.empty()
                             ? dsopt::parse_config("{}")
                             : dsopt::load_config(opts.config_path);
  if (opts.seed >= 0) {
    cfg.train.seed = static_cast<std::uint64_t>(opts.seed);
  }
  if (!opts.cell.empty()) cfg.model.cell = dsopt::cell_from_name(opts.cell);
  if (opts.detach) cfg.train.detach_forecast = true;
  if (opts.stochastic) {
    cfg.model.stochastic_head = true;
    cfg.train.stochastic = true;
  }
  if (opts.workers > 0) cfg.workers = static_cast<std::size_t>(opts.workers);

  if (!opts.out_dir.empty()) {
    cfg.out_dir = opts.out_dir;
  } else if (const char* root = std::getenv("DSOPT_OUT_ROOT")) {
    cfg.out_dir = std::string(root) + "/" + cfg.out_dir;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"joint demand forecasting and supply decision optimization"};
  app.require_subcommand(1);

  CliOptions opts;
  std::string chosen;
  for (const auto& name : dsopt::known_subcommands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", opts.config_path, "run configuration (JSON)");
    sub->add_option("--seed", opts.seed, "override train.seed");
    sub->add_option("--out", opts.out_dir, "output directory");
    sub->add_option("--workers", opts.workers, "concurrent independent runs");
    sub->add_option("--cell", opts.cell, "recurrent cell: lstm|rnn|gru");
    sub->add_flag("--detach", opts.detach, "sever the supply-to-forecast gradient");
    sub->add_flag("--stochastic-head", opts.stochastic,
                  "enable the Gaussian forecast head");
    sub->callback([&chosen, name]() { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    dsopt::RunConfig cfg = resolve_config(opts);
    dsopt::run_command(chosen, cfg);
    return 0;
  } catch (const dsopt::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const dsopt::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const dsopt::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 3;
  }
}
