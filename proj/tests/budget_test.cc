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

#include "dprule/budget.h"

#include <bit>
#include <cmath>
#include <cstdint>
#include <tuple>

#include "gtest/gtest.h"

namespace dprule {
namespace {

// Sums the probability of every response pattern of n clients, the first
// c = ceil(V n) of which hold the template, whose estimate falls below V n.
double BruteForceMiss(double beta, double v, int n) {
  const double p = std::exp(beta) / (1 + std::exp(beta));
  const double q = 1 - p;
  const int c = static_cast<int>(std::ceil(v * n - 1e-9));
  double miss = 0;
  for (uint32_t pattern = 0; pattern < (1u << n); ++pattern) {
    double prob = 1;
    for (int i = 0; i < n; ++i) {
      const bool truth = i < c;
      const bool said = (pattern >> i) & 1u;
      prob *= said == truth ? p : q;
    }
    const int y = std::popcount(pattern);
    const double c_hat = (y - n * q) / (p - q);
    if (c_hat / n < v) miss += prob;
  }
  return miss;
}

TEST(MissProbabilityTest, Fixture) {
  auto m = MissProbability(std::log(3.0), 0.2, 10);
  ASSERT_TRUE(m.ok());
  EXPECT_NEAR(*m, 0.5163230895996099, 1e-12);
  EXPECT_NEAR(BruteForceMiss(std::log(3.0), 0.2, 10), 0.5163230895996099,
              1e-12);
}

TEST(MissProbabilityTest, EqualsEnumeration) {
  for (int n = 1; n <= 12; ++n) {
    for (double v : {0.1, 0.2, 0.5}) {
      for (double beta : {0.5, std::log(3.0), 2.0}) {
        EXPECT_NEAR(*MissProbability(beta, v, n), BruteForceMiss(beta, v, n),
                    1e-12)
            << n << " " << v << " " << beta;
      }
    }
  }
}

TEST(MissProbabilityTest, SampleMonotonicity) {
  EXPECT_LE(*MissProbability(2, 0.05, 100), *MissProbability(1, 0.05, 100));
}

// Below beta = +inf the false-alarm term n q lifts the pruning cut above c,
// so the tail rises toward 1 as p -> 1; only the exact noiseless limit gives
// 0.
TEST(MissProbabilityTest, LargeBudgetBehaviour) {
  EXPECT_GT(*MissProbability(8, 0.05, 100), 0.9);
  EXPECT_EQ(*MissProbability(1000, 0.05, 100), 0.0);
}

TEST(MissProbabilityTest, NormalApproximationIsClose) {
  // Exact at the limit vs approximation just above it.
  const double exact = *MissProbability(0.5, 0.1, 100000);
  const double approx = *MissProbability(0.5, 0.1, 100001);
  EXPECT_NEAR(exact, approx, 5e-3);
}

TEST(MissProbabilityTest, Errors) {
  EXPECT_FALSE(MissProbability(0, 0.1, 10).ok());
  EXPECT_FALSE(MissProbability(1, 0, 10).ok());
  EXPECT_FALSE(MissProbability(1, 0.1, 0).ok());
}

TEST(AllocateAdaptiveTest, TrivialTheta) {
  AllocationConfig cfg;
  auto a = AllocateAdaptive(1.0, 0.05, 100, 0.999, cfg);
  ASSERT_TRUE(a.ok());
  EXPECT_DOUBLE_EQ(a->beta, cfg.beta_min);
  EXPECT_TRUE(a->bound_met);
}

TEST(AllocateAdaptiveTest, CapAtRemaining) {
  AllocationConfig cfg;
  auto a = AllocateAdaptive(0.01, 0.05, 100, 0.05, cfg);
  ASSERT_TRUE(a.ok());
  EXPECT_DOUBLE_EQ(a->beta, 0.01);
}

// Cases where beta_min fails and beta_max meets the bound, so the bisection
// runs.
TEST(AllocateAdaptiveTest, BoundAndMinimality) {
  AllocationConfig cfg;
  cfg.beta_max = 3;
  for (auto [n, v, theta] : {std::tuple{50, 0.1, 0.44},
                             std::tuple{1000, 0.1, 0.485}}) {
    ASSERT_GT(*MissProbability(cfg.beta_min, v, n), theta);
    auto a = AllocateAdaptive(1e9, v, n, theta, cfg);
    ASSERT_TRUE(a.ok());
    EXPECT_TRUE(a->bound_met);
    EXPECT_GT(a->beta, cfg.beta_min);
    EXPECT_LE(*MissProbability(a->beta, v, n), theta);
    EXPECT_GT(*MissProbability(a->beta - cfg.beta_tol, v, n), theta)
        << n << " " << v << " " << theta;
  }
}

TEST(AllocateAdaptiveTest, TickAligned) {
  AllocationConfig cfg;
  cfg.beta_max = 3;
  auto a = AllocateAdaptive(1e9, 0.1, 50, 0.44, cfg);
  ASSERT_TRUE(a.ok());
  const int64_t ticks = ToTicks(a->beta);
  EXPECT_EQ((ticks - ToTicks(cfg.beta_min)) % ToTicks(cfg.beta_tol), 0);
}

TEST(AllocateAdaptiveTest, InfeasibleBoundFlagsAndUsesMax) {
  AllocationConfig cfg;
  auto a = AllocateAdaptive(100, 0.05, 100, 0.05, cfg);
  ASSERT_TRUE(a.ok());
  EXPECT_FALSE(a->bound_met);
  EXPECT_DOUBLE_EQ(a->beta, cfg.beta_max);
}

TEST(AllocateAdaptiveTest, Errors) {
  AllocationConfig cfg;
  EXPECT_FALSE(AllocateAdaptive(0, 0.05, 100, 0.5, cfg).ok());
  cfg.beta_min = 9;
  EXPECT_FALSE(AllocateAdaptive(1, 0.05, 100, 0.5, cfg).ok());
}

TEST(AllocateUniformTest, Examples) {
  EXPECT_DOUBLE_EQ(*AllocateUniform(1, 1000), 0.001);
  EXPECT_DOUBLE_EQ(*AllocateUniform(1, 1), 1);
  EXPECT_DOUBLE_EQ(*AllocateUniform(0.01, 5000), 2e-6);
  EXPECT_FALSE(AllocateUniform(1, 0).ok());
}

TEST(ParamBudgetTest, Examples) {
  AllocationConfig cfg;
  Template two = *Parse("(x >= ? & y <= ?)");
  EXPECT_DOUBLE_EQ(*ParamBudget(two, 1, cfg), 0.1);
  EXPECT_DOUBLE_EQ(*ParamBudget(*Parse("p"), 1, cfg), 0);
  EXPECT_DOUBLE_EQ(*ParamBudget(two, 0.03, cfg), 0.03);
  EXPECT_FALSE(ParamBudget(*Parse("(x >= ? & ?)"), 1, cfg).ok());
}

TEST(LedgerTest, ExactAccounting) {
  BudgetLedger ledger(1.0);
  for (int i = 0; i < 1000; ++i) ASSERT_TRUE(ledger.Debit(0.001).ok());
  EXPECT_EQ(ledger.remaining_ticks(), 0);
  EXPECT_EQ(ledger.spent_ticks(), kTicksPerUnit);
  EXPECT_FALSE(ledger.Debit(1e-9).ok());
  EXPECT_FALSE(ledger.CanAfford(1e-9));
  EXPECT_TRUE(ledger.CanAfford(0));
}

TEST(LedgerTest, RefusesOverdraft) {
  BudgetLedger ledger(0.5);
  EXPECT_EQ(ledger.Debit(0.6).code(), absl::StatusCode::kFailedPrecondition);
  EXPECT_EQ(ledger.spent_ticks(), 0);
}

TEST(AllocatorTest, UniformSpendsExactlyEpsilon) {
  AllocationConfig cfg;
  cfg.mode = AllocationMode::kUniform;
  cfg.queries = 7;
  BudgetAllocator alloc(cfg, 1.0, 0.05, 100, 0.5);
  BudgetLedger ledger(1.0);
  int queries = 0;
  while (ledger.remaining_ticks() > 0) {
    auto a = alloc.QueryBudget(ledger.remaining());
    ASSERT_TRUE(a.ok());
    ASSERT_TRUE(ledger.Debit(a->beta).ok());
    ++queries;
  }
  EXPECT_EQ(queries, 7);
  EXPECT_EQ(ledger.spent_ticks(), kTicksPerUnit);
}

TEST(AllocationModeTest, Parse) {
  AllocationConfig cfg;
  ASSERT_TRUE(ParseAllocationMode("uniform:1000", cfg).ok());
  EXPECT_EQ(cfg.mode, AllocationMode::kUniform);
  EXPECT_EQ(cfg.queries, 1000);
  EXPECT_EQ(cfg.ModeName(), "uniform:1000");
  ASSERT_TRUE(ParseAllocationMode("adaptive", cfg).ok());
  EXPECT_EQ(cfg.ModeName(), "adaptive");
  EXPECT_FALSE(ParseAllocationMode("uniform:0", cfg).ok());
  EXPECT_FALSE(ParseAllocationMode("uniform:", cfg).ok());
  EXPECT_FALSE(ParseAllocationMode("fast", cfg).ok());
}

}  // namespace
}  // namespace dprule
