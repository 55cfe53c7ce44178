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

// Coverage, precision and rule-ensemble utility of a discovered ruleset.

#ifndef DPRULE_METRICS_H_
#define DPRULE_METRICS_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "absl/status/statusor.h"
#include "dprule/client.h"
#include "dprule/population.h"
#include "dprule/protocol.h"
#include "dprule/stl.h"

namespace dprule {

// Fraction of clients holding at least one rule that structurally matches
// `structure` with its parameters ignored.
absl::StatusOr<double> TruePrevalence(const Template& structure,
                                      const std::vector<ClientRules>& clients,
                                      bool intervals_parametric = false);

// A structure is valid when at least ceil(V n) clients hold it.
struct ValidityCounts {
  int64_t found = 0;        // |R_S|
  int64_t found_valid = 0;  // entries of R_S whose structure is valid
  int64_t valid_found = 0;  // |R_valid|, distinct structures
  int64_t valid_total = 0;  // |R_{C_V}|
};
absl::StatusOr<ValidityCounts> CountValid(
    const std::vector<DiscoveredRule>& rs,
    const std::vector<ClientRules>& clients, double v,
    bool intervals_parametric = false);

// |R_valid| / |R_{C_V}|, 1 when no structure is valid.
absl::StatusOr<double> Coverage(const std::vector<DiscoveredRule>& rs,
                                const std::vector<ClientRules>& clients,
                                double v, bool intervals_parametric = false);
// Valid entries / |R_S|, 1 when R_S is empty.
absl::StatusOr<double> Precision(const std::vector<DiscoveredRule>& rs,
                                 const std::vector<ClientRules>& clients,
                                 double v, bool intervals_parametric = false);

struct UtilityScores {
  double balanced_accuracy = 0;
  double f1 = 0;
};

// Weighted vote of the rules in `rs` at sample 0 of each signal, with weight
// clamped c_hat / n; predicts positive when the weighted share of satisfied
// rules reaches tau_vote. std::nullopt for an empty ruleset.
absl::StatusOr<std::optional<UtilityScores>> Utility(
    const std::vector<DiscoveredRule>& rs, int64_t n,
    const std::vector<LabeledSignal>& signals, double tau_vote = 0.5);

struct EvaluationReport {
  double coverage = 0;
  double precision = 0;
  int64_t rs_size = 0;
  int64_t valid_found = 0;
  int64_t valid_total = 0;
  std::optional<UtilityScores> utility;
  int64_t queries = 0;
  double epsilon_consumed = 0;
};

absl::StatusOr<EvaluationReport> EvaluateRun(
    const ProtocolRun& run, const std::vector<ClientRules>& clients, double v,
    const std::vector<LabeledSignal>& signals, bool intervals_parametric,
    double tau_vote = 0.5);

}  // namespace dprule

#endif  // DPRULE_METRICS_H_
