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

// Simulated honest clients answering match and parameter queries under local
// differential privacy.

#ifndef DPRULE_CLIENT_H_
#define DPRULE_CLIENT_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "dprule/budget.h"
#include "dprule/grammar.h"
#include "dprule/ldp.h"
#include "dprule/stl.h"

namespace dprule {

struct ClientState {
  int64_t id = 0;
  std::vector<Template> ruleset;  // canonical, in canonical order
  BudgetLedger ledger;
  Rng rng;
};

// Canonicalizes and sorts `rules`; seeds the stream from (seed, id).
ClientState MakeClient(int64_t id, std::vector<Template> rules, double epsilon,
                       uint64_t seed);

// Randomized answer to "do you hold a rule matching t?". Debits `beta`.
// ResourceExhausted when the client's budget cannot cover `beta`.
absl::StatusOr<bool> QueryRuleMatch(ClientState& c, const Template& t,
                                    double beta);

// Value range of each parameter slot of `t`: the variable's range for
// thresholds, [0, max endpoint] for interval endpoints.
absl::StatusOr<std::vector<Interval>> SlotRanges(const Template& t,
                                                 const GrammarConfig& g);

// Laplace-noised parameter values, one per slot of `t`, taken from the first
// matching rule, or drawn uniformly from the slot range when nothing matches.
// Each slot receives beta_param / slots. Debits `beta_param`.
absl::StatusOr<std::vector<double>> QueryParameters(ClientState& c,
                                                    const Template& t,
                                                    double beta_param,
                                                    const GrammarConfig& g);

// Client ruleset files: a "client <id>" line opens a block, each following
// non-empty line is one rule, '#' starts a comment.
struct ClientRules {
  int64_t id = 0;
  std::vector<Template> rules;
};
std::string FormatClientRulesets(const std::vector<ClientRules>& clients);
absl::StatusOr<std::vector<ClientRules>> ParseClientRulesets(
    std::string_view text, const Vocabulary& vocab);
// Accepts any variable and proposition names.
absl::StatusOr<std::vector<ClientRules>> ParseClientRulesets(
    std::string_view text);

}  // namespace dprule

#endif  // DPRULE_CLIENT_H_
