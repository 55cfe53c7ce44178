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

#include "dprule/ldp.h"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace dprule {

absl::StatusOr<RRParams> MakeRRParams(double beta) {
  if (!(beta > 0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("randomized response needs beta > 0, got ", beta));
  }
  RRParams r;
  r.beta = beta;
  // Logistic form; stays finite for large beta.
  r.p = 1.0 / (1.0 + std::exp(-beta));
  r.q = 1.0 / (1.0 + std::exp(beta));
  return r;
}

bool RRRespond(bool truth, const RRParams& params, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng) < params.p ? truth : !truth;
}

absl::StatusOr<CountEstimate> UnbiasedCount(int64_t y, int64_t n,
                                            const RRParams& params) {
  if (n < 1 || y < 0 || y > n) {
    return absl::InvalidArgumentError(
        absl::StrCat("yes-count ", y, " outside [0, ", n, "]"));
  }
  const double gap = params.p - params.q;
  if (!(gap > 0)) {
    return absl::InvalidArgumentError("estimator undefined for p == q");
  }
  CountEstimate e;
  e.raw = (static_cast<double>(y) - static_cast<double>(n) * params.q) / gap;
  e.clamped = std::clamp(e.raw, 0.0, static_cast<double>(n));
  return e;
}

absl::StatusOr<double> LaplacePerturb(double value, double lo, double hi,
                                      double beta_slot, Rng& rng) {
  if (!(lo < hi)) {
    return absl::InvalidArgumentError(
        absl::StrCat("Laplace range needs lo < hi, got [", lo, ", ", hi, "]"));
  }
  if (!(beta_slot > 0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("Laplace budget must be > 0, got ", beta_slot));
  }
  const double clipped = std::clamp(value, lo, hi);
  if (std::isinf(beta_slot)) return clipped;
  const double scale = (hi - lo) / beta_slot;
  // Inverse CDF on u in (-1/2, 1/2).
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double u = unit(rng) - 0.5;
  while (u == -0.5) u = unit(rng) - 0.5;
  const double noise = -scale * std::copysign(1.0, u) *
                       std::log1p(-2.0 * std::abs(u));
  return clipped + noise;
}

absl::StatusOr<double> PercentileAggregate(std::vector<double> values,
                                           double tau) {
  if (values.empty()) {
    return absl::InvalidArgumentError("percentile of an empty list");
  }
  if (!(tau > 0 && tau <= 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("percentile tau must be in (0, 1], got ", tau));
  }
  std::sort(values.begin(), values.end());
  const double need = tau * static_cast<double>(values.size());
  std::size_t k = static_cast<std::size_t>(std::ceil(need - 1e-9));
  k = std::clamp<std::size_t>(k, 1, values.size());
  return values[k - 1];
}

}  // namespace dprule
