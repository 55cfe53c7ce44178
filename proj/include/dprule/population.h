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

// Synthetic client populations with planted rules and labeled signals.

#ifndef DPRULE_POPULATION_H_
#define DPRULE_POPULATION_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dprule/client.h"
#include "dprule/grammar.h"
#include "dprule/stl.h"

namespace dprule {

struct PlantedRule {
  Template rule;
  double prevalence = 0;  // in (0, 1]
};

struct SignalSpec {
  int count = 0;  // number of labeled signals
  int length = 5;
  double cadence = 1;
  double positive_fraction = 0.5;
  // Fraction of positive signals drawn to satisfy each planted rule.
  // Negative signals are drawn to satisfy none.
  double satisfy_fraction = 0.8;
  int max_attempts = 20000;  // rejection-sampling budget per signal

  absl::Status Validate() const;
};

struct PopulationSpec {
  int64_t n = 0;
  std::vector<PlantedRule> planted;
  int filler = 0;  // random grammar rules per client
  GrammarConfig grammar;
  // Per-holder threshold jitter, as a fraction of the variable range.
  double jitter = 0;
  SignalSpec signals;
  uint64_t seed = 0;
  std::size_t enumeration_limit = 1'000'000;

  absl::Status Validate() const;
};

struct LabeledSignal {
  Signal signal;
  bool label = false;
};

struct Population {
  std::vector<ClientRules> clients;  // ids 0..n-1
  // Structure string (parameters as "?") -> fraction of clients holding it.
  std::map<std::string, double> ground_truth;
  std::vector<LabeledSignal> signals;
};

// Each planted rule goes to exactly ceil(prevalence * n) distinct clients
// chosen uniformly; filler rules are drawn uniformly from the grammar's
// complete rules with parameters uniform over their ranges.
absl::StatusOr<Population> GeneratePopulation(const PopulationSpec& spec);

// Structure key used for ground truth and metrics.
std::string StructureKey(const Template& rule, bool intervals_parametric);

// Fresh client states, every ledger granted `epsilon`.
std::vector<ClientState> MakeClients(const std::vector<ClientRules>& rules,
                                     double epsilon, uint64_t seed);

}  // namespace dprule

#endif  // DPRULE_POPULATION_H_
