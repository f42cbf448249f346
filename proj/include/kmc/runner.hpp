#pragma once

#include <string>

#include "kmc/config.hpp"

namespace kmc {

// Subcommand implementations behind the command-line front end. Each writes
// its CSV outputs plus a JSON manifest (config echo, seed, wall clock, event
// counts) into cfg.out_dir and reports progress on stdout. Errors surface as
// ConfigError / InvariantError; the front end maps them to exit codes 2 / 3.

// Per-scheme finite-difference curves.
int cmd_run(const ExperimentConfig& cfg, const std::string& config_echo);

// Variance summary per coupling cell size q (q=0 rows use the uncoupled
// pair). The summary window is the second half of the grid, [T/2, T].
int cmd_sweep_q(const ExperimentConfig& cfg, const std::string& config_echo);

// Median wall clock per scheme over cfg.repeats runs, with the ratio against
// the uncoupled pair.
int cmd_bench(const ExperimentConfig& cfg, const std::string& config_echo);

// Exact-vs-MC comparison on a small lattice: expectation curves, coupled
// finite differences, marginal total-variation distances, and a zero-step
// degeneracy check. Returns 3 when a comparison exceeds its tolerance.
int cmd_oracle_check(const ExperimentConfig& cfg, const std::string& config_echo);

}  // namespace kmc
