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

#include "dprule/metrics.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "absl/strings/str_cat.h"

namespace dprule {
namespace {

absl::StatusOr<int64_t> Holders(const Template& pattern,
                                const std::vector<ClientRules>& clients) {
  int64_t count = 0;
  for (const ClientRules& c : clients) {
    for (const Template& r : c.rules) {
      auto m = Matches(pattern, r);
      if (!m.ok()) return m.status();
      if (*m) {
        ++count;
        break;
      }
    }
  }
  return count;
}

int64_t ValidCount(double v, std::size_t n) {
  return static_cast<int64_t>(std::ceil(v * static_cast<double>(n) - 1e-9));
}

}  // namespace

absl::StatusOr<double> TruePrevalence(const Template& structure,
                                      const std::vector<ClientRules>& clients,
                                      bool intervals_parametric) {
  if (!structure.IsComplete()) {
    return absl::InvalidArgumentError(
        absl::StrCat("prevalence needs a complete rule: ", structure.ToString()));
  }
  if (clients.empty()) return 0.0;
  auto held = Holders(StripParameters(structure, intervals_parametric), clients);
  if (!held.ok()) return held.status();
  return static_cast<double>(*held) / static_cast<double>(clients.size());
}

absl::StatusOr<ValidityCounts> CountValid(
    const std::vector<DiscoveredRule>& rs,
    const std::vector<ClientRules>& clients, double v,
    bool intervals_parametric) {
  const int64_t need = ValidCount(v, clients.size());
  std::map<std::string, bool> valid;  // structure -> valid
  auto check = [&](const Template& rule) -> absl::StatusOr<bool> {
    const Template s = StripParameters(rule, intervals_parametric);
    const std::string key = s.ToString();
    if (auto it = valid.find(key); it != valid.end()) return it->second;
    auto held = Holders(s, clients);
    if (!held.ok()) return held.status();
    return valid[key] = *held >= need;
  };

  ValidityCounts out;
  for (const ClientRules& c : clients) {
    for (const Template& r : c.rules) {
      if (auto ok = check(r); !ok.ok()) return ok.status();
    }
  }
  for (const auto& [key, ok] : valid) out.valid_total += ok;

  std::set<std::string> found_valid;
  for (const DiscoveredRule& d : rs) {
    if (!d.rule.IsComplete()) {
      return absl::InvalidArgumentError(
          absl::StrCat("ruleset entry is incomplete: ", d.rule.ToString()));
    }
    auto ok = check(d.rule);
    if (!ok.ok()) return ok.status();
    ++out.found;
    if (*ok) {
      ++out.found_valid;
      found_valid.insert(StructureKey(d.rule, intervals_parametric));
    }
  }
  out.valid_found = static_cast<int64_t>(found_valid.size());
  return out;
}

absl::StatusOr<double> Coverage(const std::vector<DiscoveredRule>& rs,
                                const std::vector<ClientRules>& clients,
                                double v, bool intervals_parametric) {
  auto c = CountValid(rs, clients, v, intervals_parametric);
  if (!c.ok()) return c.status();
  if (c->valid_total == 0) return 1.0;
  return static_cast<double>(c->valid_found) /
         static_cast<double>(c->valid_total);
}

absl::StatusOr<double> Precision(const std::vector<DiscoveredRule>& rs,
                                 const std::vector<ClientRules>& clients,
                                 double v, bool intervals_parametric) {
  auto c = CountValid(rs, clients, v, intervals_parametric);
  if (!c.ok()) return c.status();
  if (c->found == 0) return 1.0;
  return static_cast<double>(c->found_valid) / static_cast<double>(c->found);
}

absl::StatusOr<std::optional<UtilityScores>> Utility(
    const std::vector<DiscoveredRule>& rs, int64_t n,
    const std::vector<LabeledSignal>& signals, double tau_vote) {
  if (rs.empty()) return std::optional<UtilityScores>();
  if (n < 1) return absl::InvalidArgumentError("n must be >= 1");
  double total = 0;
  std::vector<double> w;
  for (const DiscoveredRule& d : rs) {
    if (!d.rule.IsFullyFilled()) {
      return absl::InvalidArgumentError(
          absl::StrCat("rule has unfilled parameters: ", d.rule.ToString()));
    }
    w.push_back(std::clamp(d.c_hat_clamped / static_cast<double>(n), 0.0, 1.0));
    total += w.back();
  }
  int64_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (const LabeledSignal& s : signals) {
    double vote = 0;
    for (std::size_t i = 0; i < rs.size(); ++i) {
      auto sat = Evaluate(rs[i].rule, s.signal, 0);
      if (!sat.ok()) return sat.status();
      if (*sat) vote += w[i];
    }
    const bool predicted = total > 0 && vote / total >= tau_vote;
    if (s.label) {
      predicted ? ++tp : ++fn;
    } else {
      predicted ? ++fp : ++tn;
    }
  }
  auto ratio = [](int64_t a, int64_t b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  };
  UtilityScores u;
  const bool has_pos = tp + fn > 0, has_neg = tn + fp > 0;
  const double tpr = ratio(tp, tp + fn), tnr = ratio(tn, tn + fp);
  if (has_pos && has_neg) {
    u.balanced_accuracy = (tpr + tnr) / 2;
  } else {
    u.balanced_accuracy = has_pos ? tpr : tnr;
  }
  const double p = ratio(tp, tp + fp);
  u.f1 = p + tpr > 0 ? 2 * p * tpr / (p + tpr) : 0;
  return std::optional<UtilityScores>(u);
}

absl::StatusOr<EvaluationReport> EvaluateRun(
    const ProtocolRun& run, const std::vector<ClientRules>& clients, double v,
    const std::vector<LabeledSignal>& signals, bool intervals_parametric,
    double tau_vote) {
  auto c = CountValid(run.ruleset, clients, v, intervals_parametric);
  if (!c.ok()) return c.status();
  EvaluationReport r;
  r.rs_size = c->found;
  r.valid_found = c->valid_found;
  r.valid_total = c->valid_total;
  r.coverage = c->valid_total == 0 ? 1.0
                                   : static_cast<double>(c->valid_found) /
                                         static_cast<double>(c->valid_total);
  r.precision = c->found == 0 ? 1.0
                              : static_cast<double>(c->found_valid) /
                                    static_cast<double>(c->found);
  auto u = Utility(run.ruleset, static_cast<int64_t>(clients.size()), signals,
                   tau_vote);
  if (!u.ok()) return u.status();
  r.utility = *u;
  r.queries = static_cast<int64_t>(run.trace.size());
  r.epsilon_consumed = run.epsilon_consumed;
  return r;
}

}  // namespace dprule
