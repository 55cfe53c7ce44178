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

// Privacy-budget accounting and per-query allocation.
//
// Budgets are tracked as integer multiples of 1e-9 ("ticks") so that sums of
// per-query allocations reconcile exactly with the ledger. Every budget value
// returned by this module is tick-aligned.

#ifndef DPRULE_BUDGET_H_
#define DPRULE_BUDGET_H_

#include <cstdint>
#include <string>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dprule/stl.h"

namespace dprule {

inline constexpr int64_t kTicksPerUnit = 1'000'000'000;

// Nearest tick. Infinite or huge budgets saturate.
int64_t ToTicks(double budget);
double FromTicks(int64_t ticks);

class BudgetLedger {
 public:
  explicit BudgetLedger(double granted = 0);

  double granted() const { return FromTicks(granted_); }
  double spent() const { return FromTicks(spent_); }
  double remaining() const { return FromTicks(granted_ - spent_); }
  int64_t granted_ticks() const { return granted_; }
  int64_t spent_ticks() const { return spent_; }
  int64_t remaining_ticks() const { return granted_ - spent_; }

  bool CanAfford(double beta) const;
  // FailedPrecondition if `beta` exceeds the remaining budget.
  absl::Status Debit(double beta);

 private:
  int64_t granted_;
  int64_t spent_ = 0;
};

enum class AllocationMode { kUniform, kAdaptive };

struct AllocationConfig {
  AllocationMode mode = AllocationMode::kAdaptive;
  int64_t queries = 1000;  // Q, uniform mode
  double beta_min = 1e-4;
  double beta_max = 8;
  double beta_tol = 1e-3;
  double param_unit = 0.05;

  absl::Status Validate() const;
  // "adaptive" or "uniform:<Q>".
  std::string ModeName() const;
};

// Parses "adaptive" or "uniform:<Q>" into the mode fields of `cfg`.
absl::Status ParseAllocationMode(const std::string& text,
                                 AllocationConfig& cfg);

// Probability that a template held by exactly c = ceil(V n) clients is
// pruned: P[c_hat / n < V] with y ~ Bin(c, p) + Bin(n - c, q). Exact for
// n <= 1e5, normal approximation with continuity correction above.
absl::StatusOr<double> MissProbability(double beta, double v, int64_t n);

struct Allocation {
  double beta = 0;
  // False when even beta_max misses the theta bound.
  bool bound_met = true;
};

// Smallest grid point beta_min + k * beta_tol (or beta_max) whose miss
// probability is <= theta, located by bisection; capped at `plb`.
absl::StatusOr<Allocation> AllocateAdaptive(double plb, double v, int64_t n,
                                            double theta,
                                            const AllocationConfig& cfg);

// epsilon / Q, rounded up to a whole tick.
absl::StatusOr<double> AllocateUniform(double epsilon, int64_t q);

// min(param_unit * slots(t), plb).
absl::StatusOr<double> ParamBudget(const Template& t, double plb,
                                   const AllocationConfig& cfg);

// Per-run allocator; memoizes the adaptive solution.
class BudgetAllocator {
 public:
  BudgetAllocator(AllocationConfig cfg, double epsilon, double v, int64_t n,
                  double theta);

  absl::StatusOr<Allocation> QueryBudget(double plb);
  absl::StatusOr<double> ParameterBudget(const Template& t, double plb) const;
  const AllocationConfig& config() const { return cfg_; }

 private:
  AllocationConfig cfg_;
  double epsilon_;
  double v_;
  int64_t n_;
  double theta_;
  bool solved_ = false;
  Allocation solution_;
};

}  // namespace dprule

#endif  // DPRULE_BUDGET_H_
