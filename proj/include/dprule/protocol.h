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

// Server-side rule discovery: select, expand, query, backpropagate until the
// privacy budget or the grammar runs out.

#ifndef DPRULE_PROTOCOL_H_
#define DPRULE_PROTOCOL_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dprule/budget.h"
#include "dprule/client.h"
#include "dprule/exploration.h"
#include "dprule/grammar.h"
#include "dprule/ldp.h"
#include "dprule/stl.h"

namespace dprule {

struct ProtocolConfig {
  GrammarConfig grammar;
  double valid_threshold = 0.01;  // V
  double epsilon = 1;
  int64_t num_clients = 0;
  double theta = 0.05;
  AllocationConfig allocation;
  double exploration_constant = 0.7071067811865476;  // C_p
  double tau = 0.5;
  // Insert a completed rule only when its clamped estimate reaches V.
  bool gate_insertion = true;
  uint64_t seed = 0;
  int64_t max_iterations = 1'000'000;

  absl::Status Validate() const;
};

struct DiscoveredRule {
  Template rule;  // canonical, parameters filled
  double c_hat = 0;
  double c_hat_clamped = 0;
  int64_t query_index = 0;  // trace index of the match query
};

enum class QueryKind { kMatch, kParam };

struct TraceRow {
  int64_t query_index = 0;
  QueryKind kind = QueryKind::kMatch;
  std::string mode;
  double beta = 0;
  double remaining = 0;  // after this query
  bool bound_met = true;
};

enum class StopReason {
  kBudgetExhausted,
  kTreeExhausted,
  kIterationCap,
  kClientRefused
};
std::string_view StopReasonName(StopReason r);

struct ProtocolRun {
  std::vector<DiscoveredRule> ruleset;
  std::vector<TraceRow> trace;
  std::string tree_dump;
  int64_t iterations = 0;
  double epsilon_consumed = 0;
  double remaining = 0;
  StopReason stop = StopReason::kBudgetExhausted;
};

// One discovery run. Holds the exploration tree, R_S and the server's view
// of the remaining budget (plb), mirrored in every client's ledger.
class RuleDiscovery {
 public:
  RuleDiscovery(ProtocolConfig cfg, std::vector<ClientState>& clients);

  // One Select-Expand-Query-Backpropagate step. Returns false once the run
  // is over; stop_reason() tells why.
  absl::StatusOr<bool> Step();

  // Issues the match query (and, for complete rules, the parameter query)
  // for `t`. Returns the count estimate of the match query.
  absl::StatusOr<CountEstimate> QueryClients(const Template& t);

  ProtocolRun Finish() &&;

  double remaining() const { return ledger_.remaining(); }
  StopReason stop_reason() const { return stop_; }
  const ExplorationTree& tree() const { return tree_; }
  const std::vector<DiscoveredRule>& ruleset() const { return ruleset_; }

 private:
  absl::Status Record(QueryKind kind, double beta, bool bound_met);
  absl::Status QueryAndInsertParameters(const Template& t,
                                        const CountEstimate& c_hat,
                                        int64_t match_index);

  ProtocolConfig cfg_;
  std::vector<ClientState>& clients_;
  ExplorationTree tree_;
  BudgetAllocator allocator_;
  BudgetLedger ledger_;
  std::vector<DiscoveredRule> ruleset_;
  std::vector<TraceRow> trace_;
  int64_t iterations_ = 0;
  bool refused_ = false;
  StopReason stop_ = StopReason::kBudgetExhausted;
};

absl::StatusOr<ProtocolRun> DiscoverRules(const ProtocolConfig& cfg,
                                          std::vector<ClientState>& clients);

// R_S file: a header comment, then "rule \t c_hat \t c_hat_clamped \t
// query_index" per line.
std::string FormatRuleset(const std::vector<DiscoveredRule>& rs);
absl::StatusOr<std::vector<DiscoveredRule>> ParseRuleset(
    std::string_view text, const Vocabulary& vocab);
absl::StatusOr<std::vector<DiscoveredRule>> ParseRuleset(
    std::string_view text);

// Allocation trace CSV with header
// query_index,kind,mode,beta,remaining,bound_met.
std::string FormatTrace(const std::vector<TraceRow>& trace);

}  // namespace dprule

#endif  // DPRULE_PROTOCOL_H_
