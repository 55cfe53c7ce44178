// Copyright 2026 The dprule Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Experiment configs and the sweep runner behind the command-line tool.
// The JSON schema is documented in docs/config.md.

#ifndef DPRULE_EXPERIMENT_H_
#define DPRULE_EXPERIMENT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dprule/metrics.h"
#include "dprule/population.h"
#include "dprule/protocol.h"

namespace dprule {

struct SweepConfig {
  std::vector<double> epsilons;
  std::vector<double> valid_thresholds;  // "V"
  std::vector<double> thetas;
  std::vector<std::string> modes;  // "adaptive" or "uniform:<Q>"
  std::vector<uint64_t> seeds;
};

struct ExperimentConfig {
  // Grammar and fixed protocol knobs; epsilon, V, theta, mode and the client
  // count are set per grid point.
  ProtocolConfig protocol;
  PopulationSpec population;
  SweepConfig sweep;
  std::string output_dir = "out";
  double tau_vote = 0.5;
  uint64_t seed = 0;  // base seed, mixed with each sweep seed

  absl::Status Validate() const;
};

// Errors name the offending field, e.g. "grammar.variables[0].lo".
absl::StatusOr<ExperimentConfig> ParseExperimentConfig(std::string_view json);
absl::StatusOr<ExperimentConfig> LoadExperimentConfig(const std::string& path);

// A population spec file holds the "grammar" and "population" sections and
// an optional "seed".
absl::StatusOr<PopulationSpec> ParsePopulationSpec(std::string_view json);

// Applies DPRULE_SEED, when set, to `seed`.
absl::Status ApplySeedOverride(uint64_t& seed);

// Seed of one replicate: a mix of the base seed and the sweep seed.
uint64_t ReplicateSeed(uint64_t base, uint64_t sweep_seed);

struct GridPoint {
  double epsilon = 0;
  double v = 0;
  double theta = 0;
  std::string mode;
};

// epsilons x V x thetas x modes, in that nesting order.
std::vector<GridPoint> ExpandGrid(const SweepConfig& sweep);

struct RunRecord {
  GridPoint point;
  uint64_t seed = 0;  // sweep seed
  EvaluationReport report;
  StopReason stop = StopReason::kBudgetExhausted;
  // Filled only when debug output is requested.
  std::string trace_csv;
  std::string tree_dump;
  std::string ruleset;
};

struct SweepOptions {
  int jobs = 1;
  bool keep_debug = false;
};

// Every grid point x seed, grid-major. One population per sweep seed,
// shared across grid points.
absl::StatusOr<std::vector<RunRecord>> RunSweep(const ExperimentConfig& cfg,
                                                const SweepOptions& opts);

// Header row of the results CSV.
std::string_view ResultsHeader();

// Run rows of each grid point followed by its aggregate row (mean and sample
// standard deviation over seeds).
std::string FormatResultsCsv(const std::vector<RunRecord>& records,
                             std::size_t seeds_per_point);

struct ExperimentOptions {
  std::optional<std::string> output_dir;  // overrides the config
  bool debug = false;
  int jobs = 1;
};

// Writes <out>/results.csv, plus per-run traces, tree dumps, rulesets and
// the client file of every sweep seed under <out>/debug when requested.
absl::Status RunExperiment(const ExperimentConfig& cfg,
                           const ExperimentOptions& opts);

}  // namespace dprule

#endif  // DPRULE_EXPERIMENT_H_
