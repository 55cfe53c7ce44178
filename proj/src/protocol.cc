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

#include "dprule/protocol.h"

#include <algorithm>
#include <charconv>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "dprule/format.h"

namespace dprule {
namespace {

absl::StatusOr<double> ParseNumber(std::string_view s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("bad number '", std::string(s), "'"));
  }
  return v;
}

}  // namespace

absl::Status ProtocolConfig::Validate() const {
  if (auto st = grammar.Validate(); !st.ok()) return st;
  if (auto st = allocation.Validate(); !st.ok()) return st;
  if (!(valid_threshold > 0 && valid_threshold <= 1)) {
    return absl::InvalidArgumentError("protocol.V must be in (0, 1]");
  }
  if (!(epsilon >= 0)) {
    return absl::InvalidArgumentError("protocol.epsilon must be >= 0");
  }
  if (num_clients < 1) {
    return absl::InvalidArgumentError("number of clients must be >= 1");
  }
  if (!(theta > 0 && theta < 1)) {
    return absl::InvalidArgumentError("protocol.theta must be in (0, 1)");
  }
  if (!(exploration_constant >= 0)) {
    return absl::InvalidArgumentError("protocol.C_p must be >= 0");
  }
  if (!(tau > 0 && tau <= 1)) {
    return absl::InvalidArgumentError("protocol.tau must be in (0, 1]");
  }
  if (max_iterations < 0) {
    return absl::InvalidArgumentError("protocol.max_iterations must be >= 0");
  }
  return absl::OkStatus();
}

std::string_view StopReasonName(StopReason r) {
  switch (r) {
    case StopReason::kBudgetExhausted:
      return "budget_exhausted";
    case StopReason::kTreeExhausted:
      return "tree_exhausted";
    case StopReason::kIterationCap:
      return "iteration_cap";
    case StopReason::kClientRefused:
      return "client_refused";
  }
  return "unknown";
}

RuleDiscovery::RuleDiscovery(ProtocolConfig cfg,
                             std::vector<ClientState>& clients)
    : cfg_(std::move(cfg)),
      clients_(clients),
      tree_(cfg_.grammar, ScoreParams{cfg_.exploration_constant,
                                      cfg_.valid_threshold, cfg_.num_clients}),
      allocator_(cfg_.allocation, cfg_.epsilon, cfg_.valid_threshold,
                 cfg_.num_clients, cfg_.theta),
      ledger_(cfg_.epsilon) {}

absl::StatusOr<bool> RuleDiscovery::Step() {
  if (refused_) {
    stop_ = StopReason::kClientRefused;
    return false;
  }
  if (ledger_.remaining_ticks() <= 0) {
    stop_ = StopReason::kBudgetExhausted;
    return false;
  }
  if (iterations_ >= cfg_.max_iterations) {
    stop_ = StopReason::kIterationCap;
    return false;
  }
  auto target = tree_.NextQueryTarget();
  if (!target) {
    stop_ = StopReason::kTreeExhausted;
    return false;
  }
  auto c_hat = QueryClients(tree_.node(*target).rule);
  if (absl::IsResourceExhausted(c_hat.status())) {
    refused_ = true;
    stop_ = StopReason::kClientRefused;
    return false;
  }
  if (!c_hat.ok()) return c_hat.status();
  tree_.Backpropagate(*target, c_hat->raw);
  ++iterations_;
  return true;
}

absl::Status RuleDiscovery::Record(QueryKind kind, double beta,
                                   bool bound_met) {
  if (auto st = ledger_.Debit(beta); !st.ok()) return st;
  TraceRow row;
  row.query_index = static_cast<int64_t>(trace_.size());
  row.kind = kind;
  row.mode = allocator_.config().ModeName();
  row.beta = beta;
  row.remaining = ledger_.remaining();
  row.bound_met = bound_met;
  trace_.push_back(std::move(row));
  return absl::OkStatus();
}

absl::StatusOr<CountEstimate> RuleDiscovery::QueryClients(const Template& t) {
  auto alloc = allocator_.QueryBudget(ledger_.remaining());
  if (!alloc.ok()) return alloc.status();
  auto rr = MakeRRParams(alloc->beta);
  if (!rr.ok()) return rr.status();
  if (auto st = Record(QueryKind::kMatch, alloc->beta, alloc->bound_met);
      !st.ok()) {
    return st;
  }
  const int64_t match_index = trace_.back().query_index;
  int64_t yes = 0;
  for (ClientState& c : clients_) {
    auto answer = QueryRuleMatch(c, t, alloc->beta);
    if (!answer.ok()) return answer.status();
    yes += *answer ? 1 : 0;
  }
  auto est = UnbiasedCount(yes, cfg_.num_clients, *rr);
  if (!est.ok()) return est.status();
  if (t.IsComplete()) {
    if (auto st = QueryAndInsertParameters(t, *est, match_index); !st.ok()) {
      return st;
    }
  }
  return *est;
}

absl::Status RuleDiscovery::QueryAndInsertParameters(
    const Template& t, const CountEstimate& c_hat, int64_t match_index) {
  const double n = static_cast<double>(cfg_.num_clients);
  const bool passes_gate =
      !cfg_.gate_insertion || c_hat.clamped / n >= cfg_.valid_threshold;
  DiscoveredRule found{t, c_hat.raw, c_hat.clamped, match_index};

  const std::vector<SlotRef> slots = ListParamSlots(t);
  if (slots.empty()) {
    if (passes_gate) ruleset_.push_back(std::move(found));
    return absl::OkStatus();
  }
  auto beta_param = allocator_.ParameterBudget(t, ledger_.remaining());
  if (!beta_param.ok()) return beta_param.status();
  if (ToTicks(*beta_param) <= 0) return absl::OkStatus();
  auto ranges = SlotRanges(t, cfg_.grammar);
  if (!ranges.ok()) return ranges.status();
  if (auto st = Record(QueryKind::kParam, *beta_param, true); !st.ok()) {
    return st;
  }

  std::vector<std::vector<double>> columns(slots.size());
  for (auto& col : columns) col.reserve(clients_.size());
  for (ClientState& c : clients_) {
    auto values = QueryParameters(c, t, *beta_param, cfg_.grammar);
    if (!values.ok()) return values.status();
    for (std::size_t i = 0; i < slots.size(); ++i) {
      columns[i].push_back((*values)[i]);
    }
  }
  std::vector<double> agg(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    auto v = PercentileAggregate(std::move(columns[i]), cfg_.tau);
    if (!v.ok()) return v.status();
    agg[i] = *v;
  }
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const Interval& range = (*ranges)[i];
    switch (slots[i].kind) {
      case SlotRef::Kind::kThreshold:
        agg[i] = std::clamp(agg[i], range.lo, range.hi);
        break;
      case SlotRef::Kind::kIntervalLo:
        agg[i] = std::max(0.0, agg[i]);
        break;
      case SlotRef::Kind::kIntervalHi:
        agg[i] = std::max(agg[i - 1], agg[i]);
        break;
    }
  }
  auto filled = FillParameters(t, agg);
  if (!filled.ok()) return filled.status();
  found.rule = Canonicalize(*filled);
  if (passes_gate) ruleset_.push_back(std::move(found));
  return absl::OkStatus();
}

ProtocolRun RuleDiscovery::Finish() && {
  ProtocolRun run;
  run.ruleset = std::move(ruleset_);
  run.trace = std::move(trace_);
  run.tree_dump = tree_.Dump();
  run.iterations = iterations_;
  run.epsilon_consumed = ledger_.spent();
  run.remaining = ledger_.remaining();
  run.stop = stop_;
  return run;
}

absl::StatusOr<ProtocolRun> DiscoverRules(const ProtocolConfig& cfg,
                                          std::vector<ClientState>& clients) {
  if (auto st = cfg.Validate(); !st.ok()) return st;
  if (static_cast<int64_t>(clients.size()) != cfg.num_clients) {
    return absl::InvalidArgumentError(absl::StrCat(
        "expected ", cfg.num_clients, " clients, got ", clients.size()));
  }
  const int64_t granted = ToTicks(cfg.epsilon);
  for (const ClientState& c : clients) {
    if (c.ledger.granted_ticks() != granted) {
      return absl::InvalidArgumentError(absl::StrCat(
          "client ", c.id, " was granted ", c.ledger.granted(),
          " instead of epsilon ", cfg.epsilon));
    }
  }
  RuleDiscovery run(cfg, clients);
  while (true) {
    auto more = run.Step();
    if (!more.ok()) return more.status();
    if (!*more) break;
  }
  return std::move(run).Finish();
}

std::string FormatRuleset(const std::vector<DiscoveredRule>& rs) {
  std::string out = "# rule\tc_hat\tc_hat_clamped\tquery_index\n";
  for (const auto& r : rs) {
    absl::StrAppend(&out, r.rule.ToString(), "\t", FormatDouble(r.c_hat), "\t",
                    FormatDouble(r.c_hat_clamped), "\t", r.query_index, "\n");
  }
  return out;
}

namespace {

absl::StatusOr<std::vector<DiscoveredRule>> ParseRules(
    std::string_view text, const Vocabulary* vocab) {
  std::vector<DiscoveredRule> out;
  int line_no = 0;
  for (absl::string_view raw :
       absl::StrSplit(absl::string_view(text.data(), text.size()), '\n')) {
    ++line_no;
    std::string_view line(raw.data(), raw.size());
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> cols =
        absl::StrSplit(absl::string_view(line.data(), line.size()), '\t');
    if (cols.size() != 4) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": expected 4 tab-separated fields"));
    }
    auto rule = vocab ? Parse(cols[0], *vocab) : Parse(cols[0]);
    if (!rule.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": ", rule.status().message()));
    }
    if (!rule->IsFullyFilled()) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": rule has unfilled parameters"));
    }
    auto c_hat = ParseNumber(cols[1]);
    auto clamped = ParseNumber(cols[2]);
    auto index = ParseNumber(cols[3]);
    for (const auto* s : {&c_hat, &clamped, &index}) {
      if (!s->ok()) {
        return absl::InvalidArgumentError(
            absl::StrCat("line ", line_no, ": ", s->status().message()));
      }
    }
    out.push_back({Canonicalize(*rule), *c_hat, *clamped,
                   static_cast<int64_t>(*index)});
  }
  return out;
}

}  // namespace

absl::StatusOr<std::vector<DiscoveredRule>> ParseRuleset(
    std::string_view text, const Vocabulary& vocab) {
  return ParseRules(text, &vocab);
}

absl::StatusOr<std::vector<DiscoveredRule>> ParseRuleset(
    std::string_view text) {
  return ParseRules(text, nullptr);
}

std::string FormatTrace(const std::vector<TraceRow>& trace) {
  std::string out = "query_index,kind,mode,beta,remaining,bound_met\n";
  for (const auto& r : trace) {
    absl::StrAppend(&out, r.query_index, ",",
                    r.kind == QueryKind::kMatch ? "match" : "param", ",",
                    r.mode, ",", FormatDouble(r.beta), ",",
                    FormatDouble(r.remaining), ",", r.bound_met ? 1 : 0, "\n");
  }
  return out;
}

}  // namespace dprule
