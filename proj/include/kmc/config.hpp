#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kmc/catalog.hpp"
#include "kmc/coupling.hpp"
#include "kmc/engine.hpp"
#include "kmc/model.hpp"
#include "kmc/observable.hpp"

namespace kmc {

// Parsed form of the sectioned key = value experiment file. Sections and keys:
//
//   [model]        kind, beta, J, h, c_a, c_d, c_diff, c_r
//   [lattice]      sites (1D)  or  rows, cols (2D)
//   [observable]   kind, target, r, partition
//   [perturbation] param, epsilon
//   [coupling]     scheme (comma list), q (comma list)
//   [run]          t, samples, seed, workers, shard, rebuild, initial, repeats
//   [output]       dir, prefix
//
// '#' starts a whole-line comment. Unknown sections or keys are errors with a
// file:line diagnostic; so are malformed values.
struct ExperimentConfig {
  // [model]
  ModelKind model_kind = ModelKind::ising_ad;
  Params params;

  // [lattice]
  int rows = 1;
  int cols = 0;  // 0 until set; validated on finish

  // [observable]
  Observable observable = Observable::coverage(0);
  Partition partition = Partition::sign();

  // [perturbation]
  Param perturb_param = Param::beta;
  double epsilon = 0.0;

  // [coupling]
  std::vector<SchemeKind> scheme_kinds;
  std::vector<int> q_list;

  // [run]
  Grid grid{{1.0}};
  bool grid_set = false;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  int workers = 0;  // 0: resolve from env or hardware
  std::uint64_t shard = 256;
  std::uint64_t rebuild = EventCatalog::kDefaultRebuildInterval;
  std::string initial = "empty";  // empty | full
  int repeats = 5;                // bench repeat count, median reported

  // [output]
  std::string out_dir = ".";
  std::string prefix;

  Lattice lattice() const;
  Model nominal_model() const;
  Model perturbed_model() const;
  Configuration initial_configuration() const;
  int resolved_workers() const;  // config > KMCSENS_WORKERS > hardware
  // Expands scheme tokens against the q list (each `coarse` token becomes one
  // scheme per q > 0); order follows the config file.
  std::vector<CouplingScheme> schemes() const;
};

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);
ExperimentConfig parse_config_file(const std::string& path);

}  // namespace kmc
