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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <vector>

#include "absl/strings/str_cat.h"
#include "dprule/ldp.h"

namespace dprule {
namespace {

constexpr int64_t kMaxTicks = int64_t{4'000'000'000'000'000'000};
constexpr int64_t kExactLimit = 100'000;

// Binomial(m, prob) mass function, all m + 1 entries.
std::vector<double> BinomialPmf(int64_t m, double prob) {
  std::vector<double> pmf(static_cast<std::size_t>(m + 1), 0.0);
  if (prob <= 0) {
    pmf[0] = 1;
    return pmf;
  }
  if (prob >= 1) {
    pmf[static_cast<std::size_t>(m)] = 1;
    return pmf;
  }
  const double lp = std::log(prob);
  const double lq = std::log1p(-prob);
  const double lm = std::lgamma(static_cast<double>(m) + 1);
  for (int64_t k = 0; k <= m; ++k) {
    const double kd = static_cast<double>(k);
    const double log_choose = lm - std::lgamma(kd + 1) -
                              std::lgamma(static_cast<double>(m - k) + 1);
    pmf[static_cast<std::size_t>(k)] =
        std::exp(log_choose + kd * lp + static_cast<double>(m - k) * lq);
  }
  return pmf;
}

double NormalCdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

int64_t ToTicks(double budget) {
  if (std::isnan(budget)) return 0;
  const double t = std::round(budget * static_cast<double>(kTicksPerUnit));
  if (t >= static_cast<double>(kMaxTicks)) return kMaxTicks;
  if (t <= -static_cast<double>(kMaxTicks)) return -kMaxTicks;
  return static_cast<int64_t>(t);
}

double FromTicks(int64_t ticks) {
  return static_cast<double>(ticks) / static_cast<double>(kTicksPerUnit);
}

BudgetLedger::BudgetLedger(double granted)
    : granted_(std::max<int64_t>(0, ToTicks(granted))) {}

bool BudgetLedger::CanAfford(double beta) const {
  return ToTicks(beta) <= remaining_ticks();
}

absl::Status BudgetLedger::Debit(double beta) {
  const int64_t ticks = ToTicks(beta);
  if (ticks < 0) {
    return absl::InvalidArgumentError("negative budget debit");
  }
  if (ticks > remaining_ticks()) {
    return absl::FailedPreconditionError(
        absl::StrCat("privacy budget exhausted: requested ", beta,
                     ", remaining ", remaining()));
  }
  spent_ += ticks;
  return absl::OkStatus();
}

absl::Status AllocationConfig::Validate() const {
  if (!(beta_min > 0)) {
    return absl::InvalidArgumentError("allocation.beta_min must be > 0");
  }
  if (!(beta_min < beta_max)) {
    return absl::InvalidArgumentError(
        "allocation.beta_min must be < allocation.beta_max");
  }
  if (!(beta_tol > 0)) {
    return absl::InvalidArgumentError("allocation.beta_tol must be > 0");
  }
  if (!(param_unit >= 0)) {
    return absl::InvalidArgumentError("allocation.param_unit must be >= 0");
  }
  if (mode == AllocationMode::kUniform && queries < 1) {
    return absl::InvalidArgumentError("uniform allocation needs Q >= 1");
  }
  return absl::OkStatus();
}

std::string AllocationConfig::ModeName() const {
  return mode == AllocationMode::kAdaptive ? "adaptive"
                                           : absl::StrCat("uniform:", queries);
}

absl::Status ParseAllocationMode(const std::string& text,
                                 AllocationConfig& cfg) {
  if (text == "adaptive") {
    cfg.mode = AllocationMode::kAdaptive;
    return absl::OkStatus();
  }
  const std::string prefix = "uniform:";
  if (text.rfind(prefix, 0) == 0) {
    int64_t q = 0;
    const char* first = text.data() + prefix.size();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, q);
    if (ec == std::errc() && ptr == last && q >= 1) {
      cfg.mode = AllocationMode::kUniform;
      cfg.queries = q;
      return absl::OkStatus();
    }
  }
  return absl::InvalidArgumentError(absl::StrCat(
      "allocation mode must be 'adaptive' or 'uniform:<Q>', got '", text,
      "'"));
}

absl::StatusOr<double> MissProbability(double beta, double v, int64_t n) {
  if (!(v > 0 && v <= 1)) {
    return absl::InvalidArgumentError("V must be in (0, 1]");
  }
  if (n < 1) return absl::InvalidArgumentError("n must be >= 1");
  auto rr = MakeRRParams(beta);
  if (!rr.ok()) return rr.status();
  const double nd = static_cast<double>(n);
  const int64_t c = std::min<int64_t>(
      n, static_cast<int64_t>(std::ceil(v * nd - 1e-9)));

  // Responses y < y_star are pruned; the estimate is increasing in y.
  int64_t y_star = 0;
  while (y_star <= n) {
    auto e = UnbiasedCount(y_star, n, *rr);
    if (!e.ok()) return e.status();
    if (!(e->raw / nd < v)) break;
    ++y_star;
  }
  if (y_star == 0) return 0.0;

  if (n > kExactLimit) {
    const double cd = static_cast<double>(c);
    const double mean = cd * rr->p + (nd - cd) * rr->q;
    const double var =
        cd * rr->p * (1 - rr->p) + (nd - cd) * rr->q * (1 - rr->q);
    if (var <= 0) return static_cast<double>(y_star) > mean ? 1.0 : 0.0;
    return NormalCdf((static_cast<double>(y_star) - 0.5 - mean) /
                     std::sqrt(var));
  }

  const std::vector<double> hit = BinomialPmf(c, rr->p);
  const std::vector<double> false_alarm = BinomialPmf(n - c, rr->q);
  std::vector<double> cdf(false_alarm.size());
  double acc = 0;
  for (std::size_t i = 0; i < false_alarm.size(); ++i) {
    acc += false_alarm[i];
    cdf[i] = acc;
  }
  double total = 0;
  const int64_t y_max = y_star - 1;
  for (int64_t k = 0; k <= std::min(c, y_max); ++k) {
    const int64_t rest = std::min(y_max - k, n - c);
    total += hit[static_cast<std::size_t>(k)] *
             cdf[static_cast<std::size_t>(rest)];
  }
  return std::clamp(total, 0.0, 1.0);
}

absl::StatusOr<Allocation> AllocateAdaptive(double plb, double v, int64_t n,
                                            double theta,
                                            const AllocationConfig& cfg) {
  if (!(plb > 0)) {
    return absl::InvalidArgumentError("adaptive allocation needs plb > 0");
  }
  if (!(theta > 0 && theta < 1)) {
    return absl::InvalidArgumentError("theta must be in (0, 1)");
  }
  if (auto st = cfg.Validate(); !st.ok()) return st;

  const int64_t lo_ticks = ToTicks(cfg.beta_min);
  const int64_t tol_ticks = std::max<int64_t>(1, ToTicks(cfg.beta_tol));
  const int64_t hi_ticks = ToTicks(cfg.beta_max);
  // Grid index k -> beta_min + k * tol, with the last index mapped to
  // beta_max.
  const int64_t last = (hi_ticks - lo_ticks + tol_ticks - 1) / tol_ticks;
  auto grid = [&](int64_t k) {
    return k >= last ? hi_ticks : lo_ticks + k * tol_ticks;
  };
  auto passes = [&](int64_t k) -> absl::StatusOr<bool> {
    auto miss = MissProbability(FromTicks(grid(k)), v, n);
    if (!miss.ok()) return miss.status();
    return *miss <= theta;
  };

  Allocation out;
  int64_t chosen = 0;
  auto at_min = passes(0);
  if (!at_min.ok()) return at_min.status();
  if (*at_min) {
    chosen = grid(0);
  } else {
    auto at_max = passes(last);
    if (!at_max.ok()) return at_max.status();
    if (!*at_max) {
      chosen = hi_ticks;
      out.bound_met = false;
    } else {
      int64_t fail = 0;
      int64_t pass = last;
      while (pass - fail > 1) {
        const int64_t mid = fail + (pass - fail) / 2;
        auto ok = passes(mid);
        if (!ok.ok()) return ok.status();
        (*ok ? pass : fail) = mid;
      }
      chosen = grid(pass);
    }
  }
  out.beta = FromTicks(std::min(chosen, ToTicks(plb)));
  return out;
}

absl::StatusOr<double> AllocateUniform(double epsilon, int64_t q) {
  if (q < 1) return absl::InvalidArgumentError("uniform allocation needs Q >= 1");
  if (!(epsilon > 0)) {
    return absl::InvalidArgumentError("uniform allocation needs epsilon > 0");
  }
  const int64_t total = ToTicks(epsilon);
  return FromTicks((total + q - 1) / q);
}

absl::StatusOr<double> ParamBudget(const Template& t, double plb,
                                   const AllocationConfig& cfg) {
  auto slots = CountParamSlots(t);
  if (!slots.ok()) return slots.status();
  const int64_t want = ToTicks(cfg.param_unit) * static_cast<int64_t>(*slots);
  return FromTicks(std::max<int64_t>(0, std::min(want, ToTicks(plb))));
}

BudgetAllocator::BudgetAllocator(AllocationConfig cfg, double epsilon,
                                 double v, int64_t n, double theta)
    : cfg_(cfg), epsilon_(epsilon), v_(v), n_(n), theta_(theta) {}

absl::StatusOr<Allocation> BudgetAllocator::QueryBudget(double plb) {
  if (!(plb > 0)) {
    return absl::InvalidArgumentError("no privacy budget left to allocate");
  }
  if (!solved_) {
    if (cfg_.mode == AllocationMode::kUniform) {
      auto beta = AllocateUniform(epsilon_, cfg_.queries);
      if (!beta.ok()) return beta.status();
      solution_.beta = *beta;
    } else {
      // Solve uncapped once; the cap is applied per call.
      auto a = AllocateAdaptive(std::numeric_limits<double>::infinity(), v_,
                                n_, theta_, cfg_);
      if (!a.ok()) return a.status();
      solution_ = *a;
    }
    solved_ = true;
  }
  Allocation out = solution_;
  out.beta = FromTicks(std::min(ToTicks(out.beta), ToTicks(plb)));
  return out;
}

absl::StatusOr<double> BudgetAllocator::ParameterBudget(const Template& t,
                                                        double plb) const {
  return ParamBudget(t, plb, cfg_);
}

}  // namespace dprule
