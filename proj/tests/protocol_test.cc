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
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "gtest/gtest.h"

namespace dprule {
namespace {

Template P(const std::string& s) {
  auto t = Parse(s);
  EXPECT_TRUE(t.ok()) << s;
  return *t;
}

GrammarConfig Grammar() {
  GrammarConfig g;
  g.real_variables = {{"x", 0, 100}, {"y", 0, 10}};
  g.relops = {RelOp::kGe};
  g.operators = {Operator::kAlways};
  g.interval_endpoints = {0, 1};
  g.max_depth = 2;
  return g;
}

// beta = 1000 per match query, effectively noiseless.
ProtocolConfig Noiseless(int64_t n) {
  ProtocolConfig cfg;
  cfg.grammar = Grammar();
  cfg.valid_threshold = 0.1;
  cfg.num_clients = n;
  cfg.epsilon = 1e9;
  cfg.allocation.mode = AllocationMode::kUniform;
  cfg.allocation.queries = 1'000'000;
  cfg.allocation.param_unit = 1e5;
  return cfg;
}

std::vector<ClientState> Clients(const std::vector<std::vector<Template>>& rs,
                                 double epsilon, uint64_t seed = 1) {
  std::vector<ClientState> out;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    out.push_back(MakeClient(static_cast<int64_t>(i), rs[i], epsilon, seed));
  }
  return out;
}

std::vector<std::vector<Template>> Mixed() {
  std::vector<std::vector<Template>> rs(20);
  for (int i = 0; i < 12; ++i) {
    rs[i] = {P("G[0,1](x >= " + std::to_string(40 + i) + ")")};
  }
  rs[12] = {P("y >= 3")};
  for (int i = 13; i < 16; ++i) rs[i] = {P("G[1,1](y >= 5)")};
  return rs;
}

std::set<std::string> Structures(const std::vector<DiscoveredRule>& rs) {
  std::set<std::string> out;
  for (const auto& r : rs) out.insert(StripParameters(r.rule).ToString());
  return out;
}

int64_t SumTicks(const std::vector<TraceRow>& trace) {
  int64_t s = 0;
  for (const auto& r : trace) s += ToTicks(r.beta);
  return s;
}

TEST(ProtocolConfigTest, Validation) {
  ProtocolConfig cfg = Noiseless(3);
  EXPECT_TRUE(cfg.Validate().ok());
  for (auto mutate : std::vector<void (*)(ProtocolConfig&)>{
           [](ProtocolConfig& c) { c.valid_threshold = 0; },
           [](ProtocolConfig& c) { c.valid_threshold = 1.5; },
           [](ProtocolConfig& c) { c.epsilon = -1; },
           [](ProtocolConfig& c) { c.num_clients = 0; },
           [](ProtocolConfig& c) { c.theta = 1; },
           [](ProtocolConfig& c) { c.tau = 0; },
           [](ProtocolConfig& c) { c.exploration_constant = -1; },
           [](ProtocolConfig& c) { c.grammar.real_variables.clear(); }}) {
    ProtocolConfig bad = Noiseless(3);
    mutate(bad);
    EXPECT_FALSE(bad.Validate().ok());
  }
}

TEST(DiscoverRulesTest, RejectsMismatchedClients) {
  ProtocolConfig cfg = Noiseless(3);
  auto two = Clients({{}, {}}, cfg.epsilon);
  EXPECT_FALSE(DiscoverRules(cfg, two).ok());
  auto poor = Clients({{}, {}, {}}, cfg.epsilon);
  poor[1].ledger = BudgetLedger(1);
  EXPECT_FALSE(DiscoverRules(cfg, poor).ok());
}

TEST(DiscoverRulesTest, ZeroBudgetGivesEmptyRun) {
  ProtocolConfig cfg = Noiseless(20);
  cfg.epsilon = 0;
  auto clients = Clients(Mixed(), 0);
  auto run = DiscoverRules(cfg, clients);
  ASSERT_TRUE(run.ok()) << run.status();
  EXPECT_TRUE(run->ruleset.empty());
  EXPECT_TRUE(run->trace.empty());
  EXPECT_EQ(run->iterations, 0);
  EXPECT_EQ(run->stop, StopReason::kBudgetExhausted);
}

// Oracle: every derivable complete structure held by at least V n clients.
TEST(DiscoverRulesTest, NoiselessMatchesHolderCountOracle) {
  ProtocolConfig cfg = Noiseless(20);
  auto rules = Mixed();
  auto all = EnumerateRules(cfg.grammar, 10000);
  ASSERT_TRUE(all.ok());
  std::set<std::string> want;
  for (const Template& t : *all) {
    int held = 0;
    for (const auto& client : rules) {
      bool m = false;
      for (const auto& r : client) m = m || *Matches(t, r);
      held += m;
    }
    if (held >= cfg.valid_threshold * cfg.num_clients) {
      want.insert(StripParameters(t).ToString());
    }
  }
  EXPECT_EQ(want, (std::set<std::string>{"G[0,1](x >= ?)", "G[1,1](y >= ?)"}));

  auto clients = Clients(rules, cfg.epsilon);
  auto run = DiscoverRules(cfg, clients);
  ASSERT_TRUE(run.ok()) << run.status();
  EXPECT_EQ(Structures(run->ruleset), want);
  EXPECT_EQ(run->stop, StopReason::kTreeExhausted);
  for (const auto& r : run->ruleset) {
    EXPECT_TRUE(r.rule.IsFullyFilled());
    EXPECT_GE(r.c_hat_clamped / 20, cfg.valid_threshold);
  }
}

TEST(DiscoverRulesTest, FrequentRuleKeptRareRuleDropped) {
  const int n = 1000;
  std::vector<std::vector<Template>> rs(n);
  for (int i = 0; i < 600; ++i) rs[i] = {P("G[0,1](x >= 50)")};
  rs[600] = {P("y >= 3")};
  ProtocolConfig cfg = Noiseless(n);
  cfg.valid_threshold = 0.01;
  auto clients = Clients(rs, cfg.epsilon);
  auto run = DiscoverRules(cfg, clients);
  ASSERT_TRUE(run.ok()) << run.status();
  ASSERT_EQ(run->ruleset.size(), 1u);
  EXPECT_EQ(StripParameters(run->ruleset[0].rule).ToString(),
            "G[0,1](x >= ?)");
  EXPECT_NEAR(run->ruleset[0].c_hat, 600, 1e-6);
}

TEST(DiscoverRulesTest, ParametersArePercentileOfHeldValues) {
  const int n = 21;
  std::vector<std::vector<Template>> rs(n);
  std::vector<double> held;
  for (int i = 0; i < n; ++i) {
    const double v = 30 + 2.5 * ((i * 7) % n);
    held.push_back(v);
    rs[i] = {P("G[0,1](x >= " + std::to_string(v) + ")")};
  }
  for (double tau : {0.5, 0.25, 0.9}) {
    ProtocolConfig cfg = Noiseless(n);
    cfg.tau = tau;
    auto clients = Clients(rs, cfg.epsilon);
    auto run = DiscoverRules(cfg, clients);
    ASSERT_TRUE(run.ok()) << run.status();
    ASSERT_EQ(run->ruleset.size(), 1u);
    std::vector<double> sorted = held;
    std::sort(sorted.begin(), sorted.end());
    const auto k = static_cast<std::size_t>(std::ceil(tau * n - 1e-9));
    auto b = MatchBinding(P("G[0,1](x >= ?)"), run->ruleset[0].rule);
    ASSERT_TRUE(b.ok() && b->has_value());
    EXPECT_NEAR((**b)[0], sorted[k - 1], 0.01) << tau;
  }
}

TEST(DiscoverRulesTest, ParametricIntervalsAreFilledAndOrdered) {
  const int n = 10;
  std::vector<std::vector<Template>> rs(n, {P("G[0.5,2](x >= 70)")});
  ProtocolConfig cfg = Noiseless(n);
  cfg.grammar.interval_endpoints = {0, 2};
  cfg.grammar.intervals_parametric = true;
  auto clients = Clients(rs, cfg.epsilon);
  auto run = DiscoverRules(cfg, clients);
  ASSERT_TRUE(run.ok()) << run.status();
  ASSERT_EQ(run->ruleset.size(), 1u);
  auto b = MatchBinding(P("G[?,?](x >= ?)"), run->ruleset[0].rule);
  ASSERT_TRUE(b.ok() && b->has_value()) << run->ruleset[0].rule.ToString();
  ASSERT_EQ((*b)->size(), 3u);
  EXPECT_NEAR((**b)[0], 0.5, 0.01);
  EXPECT_NEAR((**b)[1], 2, 0.01);
  EXPECT_NEAR((**b)[2], 70, 0.01);
  EXPECT_LE((**b)[0], (**b)[1]);
}

TEST(DiscoverRulesTest, GateOffInsertsEveryCompleteRule) {
  ProtocolConfig cfg = Noiseless(20);
  cfg.gate_insertion = false;
  auto clients = Clients(Mixed(), cfg.epsilon);
  auto run = DiscoverRules(cfg, clients);
  ASSERT_TRUE(run.ok());
  auto all = EnumerateRules(cfg.grammar, 10000);
  std::set<std::string> want;
  for (const auto& t : *all) want.insert(t.ToString());
  EXPECT_EQ(Structures(run->ruleset), want);
}

TEST(DiscoverRulesTest, OnlyCompleteRulesGetParameterQueries) {
  ProtocolConfig cfg = Noiseless(20);
  auto clients = Clients(Mixed(), cfg.epsilon);
  RuleDiscovery d(cfg, clients);
  int64_t steps = 0;
  while (true) {
    auto more = d.Step();
    ASSERT_TRUE(more.ok());
    if (!*more) break;
    ++steps;
  }
  ProtocolRun run = std::move(d).Finish();
  // One match row per iteration; one param row per complete rule.
  int matches = 0, params = 0;
  for (std::size_t i = 0; i < run.trace.size(); ++i) {
    if (run.trace[i].kind == QueryKind::kMatch) {
      ++matches;
    } else {
      ++params;
      ASSERT_GT(i, 0u);
      EXPECT_EQ(run.trace[i - 1].kind, QueryKind::kMatch);
    }
  }
  EXPECT_EQ(matches, steps);
  EXPECT_EQ(static_cast<std::size_t>(params),
            EnumerateRules(cfg.grammar, 10000)->size());
  for (const auto& r : run.ruleset) {
    EXPECT_EQ(run.trace[r.query_index].kind, QueryKind::kMatch);
    EXPECT_EQ(run.trace[r.query_index + 1].kind, QueryKind::kParam);
  }
}

TEST(DiscoverRulesTest, BudgetIsConservedToTheTick) {
  for (double eps : {0.5, 1.0, 2.5}) {
    ProtocolConfig cfg = Noiseless(20);
    cfg.epsilon = eps;
    cfg.allocation = AllocationConfig();
    cfg.theta = 0.6;
    auto clients = Clients(Mixed(), eps, 3);
    auto run = DiscoverRules(cfg, clients);
    ASSERT_TRUE(run.ok()) << run.status();
    EXPECT_EQ(SumTicks(run->trace), ToTicks(run->epsilon_consumed));
    EXPECT_LE(ToTicks(run->epsilon_consumed), ToTicks(eps));
    EXPECT_EQ(ToTicks(run->epsilon_consumed) + ToTicks(run->remaining),
              ToTicks(eps));
    for (const auto& c : clients) {
      EXPECT_EQ(c.ledger.spent_ticks(), ToTicks(run->epsilon_consumed));
    }
    if (run->stop == StopReason::kBudgetExhausted) {
      EXPECT_EQ(ToTicks(run->remaining), 0);
    }
  }
}

TEST(DiscoverRulesTest, UniformSpendsExactlyEpsilonOverQueries) {
  ProtocolConfig cfg = Noiseless(20);
  cfg.epsilon = 1;
  cfg.allocation.queries = 7;
  cfg.allocation.param_unit = 0.05;
  auto clients = Clients(Mixed(), 1);
  auto run = DiscoverRules(cfg, clients);
  ASSERT_TRUE(run.ok());
  EXPECT_EQ(run->stop, StopReason::kBudgetExhausted);
  EXPECT_EQ(ToTicks(run->epsilon_consumed), ToTicks(1));
  for (const auto& r : run->trace) {
    if (r.kind == QueryKind::kMatch) EXPECT_LE(r.beta, 1.0 / 7 + 1e-9);
    EXPECT_EQ(r.mode, "uniform:7");
  }
}

TEST(DiscoverRulesTest, TraceRemainingReconciles) {
  ProtocolConfig cfg = Noiseless(20);
  cfg.epsilon = 2;
  cfg.allocation = AllocationConfig();
  cfg.theta = 0.6;
  auto clients = Clients(Mixed(), 2);
  auto run = DiscoverRules(cfg, clients);
  ASSERT_TRUE(run.ok());
  int64_t left = ToTicks(2);
  for (std::size_t i = 0; i < run->trace.size(); ++i) {
    const TraceRow& r = run->trace[i];
    EXPECT_EQ(r.query_index, static_cast<int64_t>(i));
    EXPECT_GT(ToTicks(r.beta), 0);
    left -= ToTicks(r.beta);
    EXPECT_EQ(ToTicks(r.remaining), left);
    EXPECT_EQ(r.mode, "adaptive");
  }
}

TEST(DiscoverRulesTest, DeterministicForSeed) {
  auto once = [](uint64_t seed) {
    ProtocolConfig cfg = Noiseless(20);
    cfg.epsilon = 3;
    cfg.allocation = AllocationConfig();
    cfg.theta = 0.6;
    auto clients = Clients(Mixed(), 3, seed);
    auto run = DiscoverRules(cfg, clients);
    return FormatRuleset(run->ruleset) + FormatTrace(run->trace) +
           run->tree_dump;
  };
  EXPECT_EQ(once(5), once(5));
  EXPECT_NE(once(5), once(6));
}

TEST(DiscoverRulesTest, ClientRefusalStopsTheRun) {
  ProtocolConfig cfg = Noiseless(20);
  cfg.epsilon = 1;
  cfg.allocation.queries = 10;
  auto clients = Clients(Mixed(), 1);
  clients[7].ledger = BudgetLedger(0.25);
  RuleDiscovery d(cfg, clients);
  int steps = 0;
  while (*d.Step()) ++steps;
  EXPECT_EQ(d.stop_reason(), StopReason::kClientRefused);
  EXPECT_EQ(steps, 2);
}

TEST(QueryClientsTest, EstimateIsUnbiased) {
  ProtocolConfig cfg = Noiseless(20);
  const int reps = 2000;
  cfg.epsilon = reps;
  cfg.allocation.queries = reps;  // beta = 1
  auto clients = Clients(Mixed(), cfg.epsilon, 9);
  RuleDiscovery d(cfg, clients);
  double sum = 0;
  for (int i = 0; i < reps; ++i) {
    auto c = d.QueryClients(P("G[?](?)"));
    ASSERT_TRUE(c.ok());
    sum += c->raw;
  }
  const double p = 1 / (1 + std::exp(-1.0));
  const double var = 20 * p * (1 - p) / ((2 * p - 1) * (2 * p - 1));
  EXPECT_NEAR(sum / reps, 15, 4 * std::sqrt(var / reps));
  EXPECT_EQ(ToTicks(d.remaining()), 0);
}

TEST(RulesetFileTest, RoundTrip) {
  std::vector<DiscoveredRule> rs = {{P("G[0,1](x >= 41.5)"), 12.25, 12.25, 4},
                                    {P("y >= 3"), -0.5, 0, 9}};
  const std::string text = FormatRuleset(rs);
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "# rule\tc_hat\tc_hat_clamped\tquery_index");
  auto back = ParseRuleset(text, Grammar().vocabulary());
  ASSERT_TRUE(back.ok()) << back.status();
  ASSERT_EQ(back->size(), 2u);
  for (std::size_t i = 0; i < rs.size(); ++i) {
    EXPECT_EQ((*back)[i].rule, rs[i].rule);
    EXPECT_EQ((*back)[i].c_hat, rs[i].c_hat);
    EXPECT_EQ((*back)[i].c_hat_clamped, rs[i].c_hat_clamped);
    EXPECT_EQ((*back)[i].query_index, rs[i].query_index);
  }
  Vocabulary v = Grammar().vocabulary();
  EXPECT_FALSE(ParseRuleset("x >= 1\t1\t1\n", v).ok());
  EXPECT_FALSE(ParseRuleset("x >= ?\t1\t1\t0\n", v).ok());
  EXPECT_FALSE(ParseRuleset("x >= 1\tone\t1\t0\n", v).ok());
}

TEST(TraceFileTest, Format) {
  std::vector<TraceRow> t = {{0, QueryKind::kMatch, "adaptive", 0.25, 0.75, true},
                             {1, QueryKind::kParam, "adaptive", 0.05, 0.7, false}};
  EXPECT_EQ(FormatTrace(t),
            "query_index,kind,mode,beta,remaining,bound_met\n"
            "0,match,adaptive,0.25,0.75,1\n"
            "1,param,adaptive,0.05,0.7,0\n");
}

}  // namespace
}  // namespace dprule
