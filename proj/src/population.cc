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

#include "dprule/population.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <utility>

#include "absl/strings/str_cat.h"
#include "dprule/ldp.h"

namespace dprule {
namespace {

Rng Stream(uint64_t seed, uint32_t stream) {
  std::seed_seq seq{static_cast<uint32_t>(seed),
                    static_cast<uint32_t>(seed >> 32), stream};
  return Rng(seq);
}

// Uniform values for every unfilled slot of `t`; interval endpoints sorted.
absl::StatusOr<Template> FillUniform(const Template& t, const GrammarConfig& g,
                                     Rng& rng) {
  auto ranges = SlotRanges(t, g);
  if (!ranges.ok()) return ranges.status();
  const std::vector<SlotRef> slots = ListParamSlots(t);
  std::vector<double> values(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    std::uniform_real_distribution<double> u((*ranges)[i].lo, (*ranges)[i].hi);
    values[i] = u(rng);
    if (slots[i].kind == SlotRef::Kind::kIntervalHi &&
        values[i] < values[i - 1]) {
      std::swap(values[i], values[i - 1]);
    }
  }
  auto filled = FillParameters(t, values);
  if (!filled.ok()) return filled.status();
  return Canonicalize(*filled);
}

// Shifts every threshold by up to +-jitter of its variable range.
absl::StatusOr<Template> Jitter(const Template& rule, const GrammarConfig& g,
                                double jitter, Rng& rng) {
  const Template pattern = StripParameters(rule, g.intervals_parametric);
  auto held = MatchBinding(pattern, rule);
  if (!held.ok()) return held.status();
  auto ranges = SlotRanges(pattern, g);
  if (!ranges.ok()) return ranges.status();
  const std::vector<SlotRef> slots = ListParamSlots(pattern);
  std::vector<double> values = **held;
  std::uniform_real_distribution<double> u(-jitter, jitter);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].kind != SlotRef::Kind::kThreshold) continue;
    const Interval& r = (*ranges)[i];
    values[i] = std::clamp(values[i] + u(rng) * (r.hi - r.lo), r.lo, r.hi);
  }
  auto filled = FillParameters(pattern, values);
  if (!filled.ok()) return filled.status();
  return Canonicalize(*filled);
}

Signal RandomSignal(const GrammarConfig& g, const SignalSpec& s, Rng& rng) {
  Signal sig;
  for (int k = 0; k < s.length; ++k) sig.times.push_back(k * s.cadence);
  for (const RealVariable& z : g.real_variables) {
    std::uniform_real_distribution<double> u(z.lo, z.hi);
    auto& col = sig.reals[z.name];
    for (int k = 0; k < s.length; ++k) col.push_back(u(rng));
  }
  std::bernoulli_distribution coin(0.5);
  for (const std::string& p : g.propositions) {
    auto& col = sig.props[p];
    for (int k = 0; k < s.length; ++k) col.push_back(coin(rng));
  }
  return sig;
}

// Rejection sampling toward the wanted satisfaction pattern; keeps the
// candidate meeting the most constraints if none meets all of them.
absl::StatusOr<Signal> DrawSignal(const std::vector<PlantedRule>& planted,
                                  const std::vector<bool>& want,
                                  const GrammarConfig& g, const SignalSpec& s,
                                  Rng& rng) {
  Signal best;
  int best_met = -1;
  for (int attempt = 0; attempt < s.max_attempts; ++attempt) {
    Signal sig = RandomSignal(g, s, rng);
    int met = 0;
    for (std::size_t i = 0; i < planted.size(); ++i) {
      auto sat = Evaluate(planted[i].rule, sig, 0);
      if (!sat.ok()) return sat.status();
      met += *sat == want[i];
    }
    if (met > best_met) {
      best_met = met;
      best = std::move(sig);
    }
    if (met == static_cast<int>(planted.size())) break;
  }
  return best;
}

}  // namespace

absl::Status SignalSpec::Validate() const {
  if (count < 0) return absl::InvalidArgumentError("signals.count must be >= 0");
  if (length < 1) {
    return absl::InvalidArgumentError("signals.length must be >= 1");
  }
  if (!(cadence > 0)) {
    return absl::InvalidArgumentError("signals.cadence must be > 0");
  }
  if (!(positive_fraction >= 0 && positive_fraction <= 1)) {
    return absl::InvalidArgumentError(
        "signals.positive_fraction must be in [0, 1]");
  }
  if (!(satisfy_fraction >= 0 && satisfy_fraction <= 1)) {
    return absl::InvalidArgumentError(
        "signals.satisfy_fraction must be in [0, 1]");
  }
  if (max_attempts < 1) {
    return absl::InvalidArgumentError("signals.max_attempts must be >= 1");
  }
  return absl::OkStatus();
}

absl::Status PopulationSpec::Validate() const {
  if (n < 1) return absl::InvalidArgumentError("population.n must be >= 1");
  if (filler < 0) {
    return absl::InvalidArgumentError("population.filler must be >= 0");
  }
  if (!(jitter >= 0 && jitter <= 1)) {
    return absl::InvalidArgumentError("population.jitter must be in [0, 1]");
  }
  if (auto st = grammar.Validate(); !st.ok()) return st;
  if (auto st = signals.Validate(); !st.ok()) return st;
  for (const PlantedRule& p : planted) {
    if (!(p.prevalence > 0 && p.prevalence <= 1)) {
      return absl::InvalidArgumentError(
          absl::StrCat("prevalence of ", p.rule.ToString(),
                       " must be in (0, 1]"));
    }
    if (!p.rule.IsFullyFilled()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "planted rule ", p.rule.ToString(), " must be complete and filled"));
    }
    if (!IsDerivable(p.rule, grammar)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "planted rule ", p.rule.ToString(), " is not reachable in the grammar"));
    }
  }
  return absl::OkStatus();
}

std::string StructureKey(const Template& rule, bool intervals_parametric) {
  return StripParameters(rule, intervals_parametric).ToString();
}

absl::StatusOr<Population> GeneratePopulation(const PopulationSpec& spec) {
  if (auto st = spec.Validate(); !st.ok()) return st;
  const GrammarConfig& g = spec.grammar;
  Rng rng = Stream(spec.seed, 0);
  Population pop;
  pop.clients.resize(spec.n);
  for (int64_t i = 0; i < spec.n; ++i) pop.clients[i].id = i;

  std::vector<int64_t> order(spec.n);
  for (const PlantedRule& p : spec.planted) {
    const Template rule = Canonicalize(p.rule);
    const auto holders = static_cast<int64_t>(
        std::ceil(p.prevalence * static_cast<double>(spec.n) - 1e-9));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::sort(order.begin(), order.begin() + holders);
    for (int64_t k = 0; k < holders; ++k) {
      Template held = rule;
      if (spec.jitter > 0) {
        auto j = Jitter(rule, g, spec.jitter, rng);
        if (!j.ok()) return j.status();
        held = *std::move(j);
      }
      pop.clients[order[k]].rules.push_back(std::move(held));
    }
  }

  if (spec.filler > 0) {
    auto all = EnumerateRules(g, spec.enumeration_limit);
    if (!all.ok()) return all.status();
    if (all->empty()) {
      return absl::InvalidArgumentError("grammar has no complete rules");
    }
    std::uniform_int_distribution<std::size_t> pick(0, all->size() - 1);
    for (ClientRules& c : pop.clients) {
      for (int k = 0; k < spec.filler; ++k) {
        auto r = FillUniform((*all)[pick(rng)], g, rng);
        if (!r.ok()) return r.status();
        c.rules.push_back(*std::move(r));
      }
    }
  }

  std::map<std::string, int64_t> holders;
  for (const ClientRules& c : pop.clients) {
    std::set<std::string> mine;
    for (const Template& r : c.rules) {
      mine.insert(StructureKey(r, g.intervals_parametric));
    }
    for (const auto& key : mine) ++holders[key];
  }
  for (const auto& [key, count] : holders) {
    pop.ground_truth[key] =
        static_cast<double>(count) / static_cast<double>(spec.n);
  }

  Rng sig_rng = Stream(spec.seed, 1);
  std::bernoulli_distribution positive(spec.signals.positive_fraction);
  std::bernoulli_distribution satisfy(spec.signals.satisfy_fraction);
  for (int s = 0; s < spec.signals.count; ++s) {
    LabeledSignal ls;
    ls.label = positive(sig_rng);
    std::vector<bool> want(spec.planted.size(), false);
    if (ls.label) {
      for (std::size_t i = 0; i < want.size(); ++i) want[i] = satisfy(sig_rng);
    }
    auto sig = DrawSignal(spec.planted, want, g, spec.signals, sig_rng);
    if (!sig.ok()) return sig.status();
    ls.signal = *std::move(sig);
    pop.signals.push_back(std::move(ls));
  }
  return pop;
}

std::vector<ClientState> MakeClients(const std::vector<ClientRules>& rules,
                                     double epsilon, uint64_t seed) {
  std::vector<ClientState> out;
  out.reserve(rules.size());
  for (const ClientRules& c : rules) {
    out.push_back(MakeClient(c.id, c.rules, epsilon, seed));
  }
  return out;
}

}  // namespace dprule
