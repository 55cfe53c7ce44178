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

#include "dprule/client.h"

#include <algorithm>
#include <charconv>
#include <optional>
#include <set>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace dprule {
namespace {

absl::Status CheckBudget(const ClientState& c, double beta) {
  if (!c.ledger.CanAfford(beta)) {
    return absl::ResourceExhaustedError(absl::StrCat(
        "client ", c.id, " refuses: budget ", c.ledger.remaining(),
        " cannot cover ", beta));
  }
  return absl::OkStatus();
}

std::string_view Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

ClientState MakeClient(int64_t id, std::vector<Template> rules, double epsilon,
                       uint64_t seed) {
  ClientState c;
  c.id = id;
  for (auto& r : rules) r = Canonicalize(r);
  std::stable_sort(rules.begin(), rules.end(),
                   [](const Template& a, const Template& b) {
                     return !CanonicalLessOrEqual(b, a);
                   });
  c.ruleset = std::move(rules);
  c.ledger = BudgetLedger(epsilon);
  const uint64_t uid = static_cast<uint64_t>(id);
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(uid), static_cast<uint32_t>(uid >> 32)};
  c.rng.seed(seq);
  return c;
}

absl::StatusOr<bool> QueryRuleMatch(ClientState& c, const Template& t,
                                    double beta) {
  auto rr = MakeRRParams(beta);
  if (!rr.ok()) return rr.status();
  if (auto st = CheckBudget(c, beta); !st.ok()) return st;
  bool truth = false;
  for (const auto& r : c.ruleset) {
    auto m = Matches(t, r);
    if (!m.ok()) return m.status();
    if (*m) {
      truth = true;
      break;
    }
  }
  if (auto st = c.ledger.Debit(beta); !st.ok()) return st;
  return RRRespond(truth, *rr, c.rng);
}

absl::StatusOr<std::vector<Interval>> SlotRanges(const Template& t,
                                                 const GrammarConfig& g) {
  std::vector<Interval> out;
  for (const SlotRef& s : ListParamSlots(t)) {
    if (s.kind == SlotRef::Kind::kThreshold) {
      const RealVariable* z = g.FindVariable(s.variable);
      if (z == nullptr) {
        return absl::InvalidArgumentError(
            absl::StrCat("no range for variable '", s.variable, "'"));
      }
      out.push_back({z->lo, z->hi});
    } else {
      const double top = g.MaxEndpoint();
      if (!(top > 0)) {
        return absl::InvalidArgumentError(
            "interval parameters need a positive maximum endpoint");
      }
      out.push_back({0, top});
    }
  }
  return out;
}

absl::StatusOr<std::vector<double>> QueryParameters(ClientState& c,
                                                    const Template& t,
                                                    double beta_param,
                                                    const GrammarConfig& g) {
  if (!t.IsComplete()) {
    return absl::InvalidArgumentError(
        absl::StrCat("parameter query needs a complete rule: ", t.ToString()));
  }
  if (!(beta_param > 0)) {
    return absl::InvalidArgumentError("parameter query needs beta_param > 0");
  }
  auto ranges = SlotRanges(t, g);
  if (!ranges.ok()) return ranges.status();
  if (auto st = CheckBudget(c, beta_param); !st.ok()) return st;

  std::optional<std::vector<double>> held;
  for (const auto& r : c.ruleset) {
    auto b = MatchBinding(t, r);
    if (!b.ok()) return b.status();
    if (b->has_value()) {
      held = std::move(**b);
      break;
    }
  }
  if (auto st = c.ledger.Debit(beta_param); !st.ok()) return st;

  const std::size_t slots = ranges->size();
  std::vector<double> out;
  out.reserve(slots);
  if (slots == 0) return out;
  const double per_slot = beta_param / static_cast<double>(slots);
  for (std::size_t i = 0; i < slots; ++i) {
    const Interval& range = (*ranges)[i];
    double value;
    if (held) {
      value = (*held)[i];
    } else {
      std::uniform_real_distribution<double> u(range.lo, range.hi);
      value = u(c.rng);
    }
    auto noised = LaplacePerturb(value, range.lo, range.hi, per_slot, c.rng);
    if (!noised.ok()) return noised.status();
    out.push_back(*noised);
  }
  return out;
}

std::string FormatClientRulesets(const std::vector<ClientRules>& clients) {
  std::string out;
  for (const auto& c : clients) {
    absl::StrAppend(&out, "client ", c.id, "\n");
    for (const auto& r : c.rules) absl::StrAppend(&out, r.ToString(), "\n");
    out += "\n";
  }
  return out;
}

namespace {

absl::StatusOr<std::vector<ClientRules>> ParseClients(std::string_view text,
                                                      const Vocabulary* vocab) {
  std::vector<ClientRules> out;
  std::set<int64_t> ids;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view()
                                        : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;
    if (line.substr(0, 7) == "client ") {
      const std::string_view num = Trim(line.substr(7));
      int64_t id = 0;
      auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), id);
      if (ec != std::errc() || ptr != num.data() + num.size()) {
        return absl::InvalidArgumentError(
            absl::StrCat("line ", line_no, ": bad client id"));
      }
      if (!ids.insert(id).second) {
        return absl::InvalidArgumentError(
            absl::StrCat("line ", line_no, ": duplicate client ", id));
      }
      out.push_back({id, {}});
      continue;
    }
    if (out.empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": rule before any client header"));
    }
    auto rule = vocab ? Parse(line, *vocab) : Parse(line);
    if (!rule.ok()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "line ", line_no, ": ", rule.status().message()));
    }
    if (!rule->IsFullyFilled()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "line ", line_no, ": client rules must be complete and filled"));
    }
    out.back().rules.push_back(*std::move(rule));
  }
  return out;
}

}  // namespace

absl::StatusOr<std::vector<ClientRules>> ParseClientRulesets(
    std::string_view text, const Vocabulary& vocab) {
  return ParseClients(text, &vocab);
}

absl::StatusOr<std::vector<ClientRules>> ParseClientRulesets(
    std::string_view text) {
  return ParseClients(text, nullptr);
}

}  // namespace dprule
