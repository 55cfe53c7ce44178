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

DiscoveredRule D(const std::string& s, double c_hat = 1) {
  return {P(s), c_hat, c_hat, 0};
}

Signal S(double x, double y) {
  Signal s;
  s.times = {0};
  s.reals["x"] = {x};
  s.reals["y"] = {y};
  return s;
}

// Independent oracle: a client holds `structure` if one of its rules prints
// the same once every threshold is replaced by "?".
double OraclePrevalence(const std::string& structure,
                        const std::vector<ClientRules>& clients) {
  int held = 0;
  for (const auto& c : clients) {
    bool any = false;
    for (const auto& r : c.rules) {
      any = any || r.StructureString() == structure;
    }
    held += any;
  }
  return held / double(clients.size());
}

TEST(TruePrevalenceTest, Examples) {
  std::vector<ClientRules> clients(100);
  for (int i = 0; i < 25; ++i) clients[i].rules = {P("x >= 3")};
  EXPECT_EQ(*TruePrevalence(P("x >= 3"), clients), 0.25);
  EXPECT_EQ(*TruePrevalence(P("y >= 3"), clients), 0);
  // Differing parameters pool into one structure.
  for (int i = 25; i < 35; ++i) clients[i].rules = {P("x >= 70")};
  EXPECT_EQ(*TruePrevalence(P("x >= 1"), clients), 0.35);
  EXPECT_EQ(*TruePrevalence(P("x >= ?"), clients), 0.35);
  // A client holding two matching rules counts once.
  clients[0].rules.push_back(P("x >= 5"));
  EXPECT_EQ(*TruePrevalence(P("x >= 1"), clients), 0.35);
  EXPECT_FALSE(TruePrevalence(P("(x >= 1 & ?)"), clients).ok());
  EXPECT_EQ(*TruePrevalence(P("x >= 1"), {}), 0);
}

TEST(TruePrevalenceTest, MatchesBruteForceOracle) {
  GrammarConfig g;
  g.real_variables = {{"x", 0, 10}, {"y", 0, 10}};
  g.relops = {RelOp::kGe, RelOp::kLe};
  g.operators = {Operator::kAnd, Operator::kOr, Operator::kAlways};
  g.interval_endpoints = {0, 1};
  g.max_depth = 2;
  for (uint64_t seed : {1, 2}) {
    PopulationSpec s;
    s.n = 60;
    s.grammar = g;
    s.filler = 3;
    s.seed = seed;
    auto pop = GeneratePopulation(s);
    ASSERT_TRUE(pop.ok());
    auto all = EnumerateRules(g, 100000);
    ASSERT_TRUE(all.ok());
    for (const Template& t : *all) {
      EXPECT_EQ(*TruePrevalence(t, pop->clients),
                OraclePrevalence(t.StructureString(), pop->clients))
          << t.ToString();
    }
  }
}

std::vector<ClientRules> FourValid() {
  // s1..s4 held by 2 of 10 clients each; "p" by one client only.
  std::vector<ClientRules> clients(10);
  const char* rules[] = {"x >= 1", "y >= 1", "G[0,1](x >= 1)", "x <= 1"};
  for (int i = 0; i < 4; ++i) {
    clients[2 * i].rules.push_back(P(rules[i]));
    clients[2 * i + 1].rules.push_back(P(rules[i]));
  }
  clients[9].rules.push_back(P("p"));
  return clients;
}

TEST(CoverageTest, Examples) {
  const auto clients = FourValid();
  EXPECT_EQ(*Coverage({D("x >= 5"), D("y >= 9"), D("G[0,1](x >= 2)")},
                      clients, 0.2),
            0.75);
  EXPECT_EQ(*Coverage({D("x >= 5"), D("y >= 9"), D("G[0,1](x >= 2)"),
                       D("x <= 3")},
                      clients, 0.2),
            1.0);
  EXPECT_EQ(*Coverage({}, clients, 0.2), 0);
  EXPECT_EQ(*Coverage({}, clients, 0.5), 1.0);  // nothing valid
  // Duplicate structures are counted once.
  EXPECT_EQ(*Coverage({D("x >= 5"), D("x >= 6")}, clients, 0.2), 0.25);
}

TEST(PrecisionTest, Examples) {
  const auto clients = FourValid();
  EXPECT_EQ(*Precision({D("x >= 5"), D("y >= 9"), D("G[0,1](x >= 2)"),
                        D("p"), D("F[0,1](y >= 1)")},
                       clients, 0.2),
            0.6);
  EXPECT_EQ(*Precision({D("x >= 5"), D("x <= 2")}, clients, 0.2), 1.0);
  EXPECT_EQ(*Precision({D("p"), D("y <= 1")}, clients, 0.2), 0);
  EXPECT_EQ(*Precision({}, clients, 0.2), 1.0);
  // "p" is held by 1 of 10 clients: valid at V = 0.1.
  EXPECT_EQ(*Precision({D("p")}, clients, 0.1), 1.0);
}

TEST(CountValidTest, Counts) {
  auto c = CountValid({D("x >= 5"), D("x >= 6"), D("p")}, FourValid(), 0.2);
  ASSERT_TRUE(c.ok());
  EXPECT_EQ(c->found, 3);
  EXPECT_EQ(c->found_valid, 2);
  EXPECT_EQ(c->valid_found, 1);
  EXPECT_EQ(c->valid_total, 4);
}

TEST(UtilityTest, PerfectSeparation) {
  std::vector<LabeledSignal> sig = {
      {S(80, 0), true}, {S(90, 0), true}, {S(10, 0), false}, {S(20, 0), false}};
  auto u = Utility({D("x >= 50", 40)}, 100, sig);
  ASSERT_TRUE(u.ok() && u->has_value());
  EXPECT_EQ((*u)->balanced_accuracy, 1.0);
  EXPECT_EQ((*u)->f1, 1.0);
}

TEST(UtilityTest, ConstantNegativeOnBalancedLabels) {
  std::vector<LabeledSignal> sig = {
      {S(10, 0), true}, {S(20, 0), true}, {S(10, 0), false}, {S(20, 0), false}};
  auto u = Utility({D("x >= 50", 40)}, 100, sig);
  ASSERT_TRUE(u.ok() && u->has_value());
  EXPECT_EQ((*u)->balanced_accuracy, 0.5);
  EXPECT_EQ((*u)->f1, 0);
}

// Rule A = x >= 50 (weight 0.9), rule B = y >= 5 (weight 0.1).
//   s1: A only,  label 1 -> vote 0.9 -> 1 (TP)
//   s2: B only,  label 1 -> vote 0.1 -> 0 (FN)
//   s3: neither, label 0 -> vote 0   -> 0 (TN)
// TPR 1/2, TNR 1, precision 1: balanced accuracy 0.75, F1 2/3.
TEST(UtilityTest, WeightedVoteFixture) {
  std::vector<LabeledSignal> sig = {
      {S(60, 0), true}, {S(10, 9), true}, {S(10, 0), false}};
  auto u = Utility({D("x >= 50", 90), D("y >= 5", 10)}, 100, sig);
  ASSERT_TRUE(u.ok() && u->has_value());
  EXPECT_DOUBLE_EQ((*u)->balanced_accuracy, 0.75);
  EXPECT_DOUBLE_EQ((*u)->f1, 2.0 / 3);
  // Swapped weights flip s1 and s2.
  auto w = Utility({D("x >= 50", 10), D("y >= 5", 90)}, 100, sig);
  EXPECT_DOUBLE_EQ((*w)->balanced_accuracy, 0.75);
  // Lowering the vote threshold to 0.1 accepts both.
  auto t = Utility({D("x >= 50", 90), D("y >= 5", 10)}, 100, sig, 0.1);
  EXPECT_DOUBLE_EQ((*t)->balanced_accuracy, 1.0);
  EXPECT_DOUBLE_EQ((*t)->f1, 1.0);
}

TEST(UtilityTest, EmptyRulesetIsUndefined) {
  auto u = Utility({}, 100, {{S(1, 1), true}});
  ASSERT_TRUE(u.ok());
  EXPECT_FALSE(u->has_value());
  EXPECT_FALSE(Utility({D("x >= ?")}, 100, {{S(1, 1), true}}).ok());
}

TEST(EvaluateRunTest, NoiselessEndToEndIsPerfect) {
  GrammarConfig g;
  g.real_variables = {{"x", 0, 100}, {"y", 0, 10}};
  g.relops = {RelOp::kGe, RelOp::kLe};
  g.operators = {Operator::kAnd, Operator::kAlways};
  g.interval_endpoints = {0, 1};
  g.max_depth = 2;
  PopulationSpec spec;
  spec.n = 100;
  spec.grammar = g;
  spec.planted = {{P("G[0,1](x >= 40)"), 0.6},
                  {P("(x >= 20 & y <= 5)"), 0.1},
                  {P("y >= 7"), 0.02}};
  spec.filler = 1;
  spec.signals.count = 50;
  spec.seed = 4;
  auto pop = GeneratePopulation(spec);
  ASSERT_TRUE(pop.ok());

  ProtocolConfig cfg;
  cfg.grammar = g;
  cfg.valid_threshold = 0.01;
  cfg.num_clients = spec.n;
  cfg.epsilon = 1e9;
  cfg.allocation.mode = AllocationMode::kUniform;
  cfg.allocation.queries = 1'000'000;
  auto clients = MakeClients(pop->clients, cfg.epsilon, 4);
  auto run = DiscoverRules(cfg, clients);
  ASSERT_TRUE(run.ok()) << run.status();
  auto report = EvaluateRun(*run, pop->clients, 0.01, pop->signals, false);
  ASSERT_TRUE(report.ok()) << report.status();
  EXPECT_EQ(report->coverage, 1.0);
  EXPECT_EQ(report->precision, 1.0);
  EXPECT_EQ(report->valid_found, report->valid_total);
  EXPECT_GE(report->valid_total, 3);
  EXPECT_TRUE(report->utility.has_value());
  EXPECT_EQ(report->queries, static_cast<int64_t>(run->trace.size()));
  EXPECT_EQ(report->epsilon_consumed, run->epsilon_consumed);
}

}  // namespace
}  // namespace dprule
