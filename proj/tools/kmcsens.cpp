#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "kmc/config.hpp"
#include "kmc/errors.hpp"
#include "kmc/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"coupled finite-difference sensitivity analysis for lattice kinetic Monte Carlo"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  int workers = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "experiment config file")->required();
    sub->add_option("--samples", samples, "override [run] samples");
    sub->add_option("--seed", seed, "override [run] seed");
    sub->add_option("--workers", workers, "override worker count");
  };
  add_common(app.add_subcommand("run", "estimate finite-difference curves per scheme"));
  add_common(app.add_subcommand("sweep-q", "variance summary across coupling cell sizes"));
  add_common(app.add_subcommand("bench", "wall-clock ratios of coupled vs uncoupled pairs"));
  add_common(app.add_subcommand("oracle-check",
                                "compare estimators against the exact solver on a small lattice"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    std::ifstream in(config_path);
    if (!in) throw kmc::ConfigError("cannot open config file '" + config_path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string echo = buf.str();
    kmc::ExperimentConfig cfg = kmc::parse_config_text(echo, config_path);
    if (sub->count("--samples")) cfg.samples = samples;
    if (sub->count("--seed")) cfg.seed = seed;
    if (sub->count("--workers")) cfg.workers = workers;

    const std::string name = sub->get_name();
    if (name == "run") return kmc::cmd_run(cfg, echo);
    if (name == "sweep-q") return kmc::cmd_sweep_q(cfg, echo);
    if (name == "bench") return kmc::cmd_bench(cfg, echo);
    return kmc::cmd_oracle_check(cfg, echo);
  } catch (const kmc::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const kmc::InvariantError& e) {
    std::fprintf(stderr, "invariant violation: %s\n", e.what());
    return 3;
  }
}
