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

// dprule: run discovery sweeps, generate populations, score rulesets.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "dprule/experiment.h"
#include "dprule/format.h"
#include "dprule/metrics.h"

namespace {

std::optional<std::string> Slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int Fail(const absl::Status& st) {
  std::cerr << "dprule: " << st.message() << "\n";
  return st.code() == absl::StatusCode::kInvalidArgument ? 2 : 1;
}

int Run(const std::string& config, const std::string& out, bool debug,
        int jobs) {
  auto cfg = dprule::LoadExperimentConfig(config);
  if (!cfg.ok()) return Fail(cfg.status());
  if (auto st = dprule::ApplySeedOverride(cfg->seed); !st.ok()) return Fail(st);
  dprule::ExperimentOptions opts;
  if (!out.empty()) opts.output_dir = out;
  opts.debug = debug;
  opts.jobs = jobs;
  if (auto st = dprule::RunExperiment(*cfg, opts); !st.ok()) return Fail(st);
  std::cout << "wrote " << (out.empty() ? cfg->output_dir : out)
            << "/results.csv\n";
  return 0;
}

int GenPopulation(const std::string& spec_path, const std::string& out) {
  auto text = Slurp(spec_path);
  if (!text) return Fail(absl::NotFoundError("cannot read " + spec_path));
  auto spec = dprule::ParsePopulationSpec(*text);
  if (!spec.ok()) return Fail(spec.status());
  if (auto st = dprule::ApplySeedOverride(spec->seed); !st.ok()) return Fail(st);
  auto pop = dprule::GeneratePopulation(*spec);
  if (!pop.ok()) return Fail(pop.status());
  std::ofstream file(out, std::ios::binary | std::ios::trunc);
  file << "# " << spec->n << " clients, seed " << spec->seed << "\n";
  for (const auto& [structure, prevalence] : pop->ground_truth) {
    file << "# prevalence " << dprule::FormatDouble(prevalence) << "\t"
         << structure << "\n";
  }
  file << dprule::FormatClientRulesets(pop->clients);
  file.close();
  if (!file) return Fail(absl::PermissionDeniedError("cannot write " + out));
  return 0;
}

int Eval(const std::string& ruleset_path, const std::string& clients_path,
         double v, bool parametric) {
  auto rs_text = Slurp(ruleset_path);
  if (!rs_text) return Fail(absl::NotFoundError("cannot read " + ruleset_path));
  auto cl_text = Slurp(clients_path);
  if (!cl_text) return Fail(absl::NotFoundError("cannot read " + clients_path));
  auto clients = dprule::ParseClientRulesets(*cl_text);
  if (!clients.ok()) return Fail(clients.status());
  auto rs = dprule::ParseRuleset(*rs_text);
  if (!rs.ok()) return Fail(rs.status());
  auto counts = dprule::CountValid(*rs, *clients, v, parametric);
  if (!counts.ok()) return Fail(counts.status());
  const double coverage =
      counts->valid_total == 0
          ? 1.0
          : static_cast<double>(counts->valid_found) / counts->valid_total;
  const double precision =
      counts->found == 0
          ? 1.0
          : static_cast<double>(counts->found_valid) / counts->found;
  std::cout << "coverage," << dprule::FormatDouble(coverage) << "\n"
            << "precision," << dprule::FormatDouble(precision) << "\n"
            << "rs_size," << counts->found << "\n"
            << "valid_found," << counts->valid_found << "\n"
            << "valid_total," << counts->valid_total << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rule discovery under local differential privacy"};
  app.require_subcommand(1);

  std::string config, out;
  bool debug = false;
  int jobs = 1;
  CLI::App* run = app.add_subcommand("run", "Run an experiment sweep");
  run->add_option("--config", config, "Experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory (overrides the config)");
  run->add_flag("--debug", debug, "Write per-run traces and tree dumps");
  run->add_option("--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);

  std::string spec, pop_out;
  CLI::App* gen =
      app.add_subcommand("gen-population", "Write a synthetic client file");
  gen->add_option("--spec", spec, "Population spec (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  gen->add_option("--out", pop_out, "Client ruleset file")->required();

  std::string ruleset, clients;
  double v = 0;
  bool parametric = false;
  CLI::App* eval = app.add_subcommand("eval", "Score a discovered ruleset");
  eval->add_option("--ruleset", ruleset, "Ruleset file")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--clients", clients, "Client ruleset file")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--v", v, "Valid rule threshold")
      ->required()
      ->check(CLI::Range(0.0, 1.0));
  eval->add_flag("--intervals-parametric", parametric,
                 "Treat interval endpoints as parameters");

  CLI11_PARSE(app, argc, argv);
  if (*run) return Run(config, out, debug, jobs);
  if (*gen) return GenPopulation(spec, pop_out);
  return Eval(ruleset, clients, v, parametric);
}
