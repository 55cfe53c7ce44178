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

// Local differential privacy mechanisms: direct-encoding randomized response,
// the unbiased count estimator, Laplace noise and percentile aggregation.

#ifndef DPRULE_LDP_H_
#define DPRULE_LDP_H_

#include <cstdint>
#include <random>
#include <vector>

#include "absl/status/statusor.h"

namespace dprule {

using Rng = std::mt19937_64;

struct RRParams {
  double beta = 0;
  double p = 0;  // probability of a truthful answer
  double q = 0;  // 1 - p
};

// p = e^beta / (1 + e^beta). Fails unless beta > 0.
absl::StatusOr<RRParams> MakeRRParams(double beta);

bool RRRespond(bool truth, const RRParams& params, Rng& rng);

struct CountEstimate {
  double raw = 0;
  double clamped = 0;  // raw clamped to [0, n]
};

// (y - n q) / (p - q).
absl::StatusOr<CountEstimate> UnbiasedCount(int64_t y, int64_t n,
                                            const RRParams& params);

// Clips `value` to [lo, hi] and adds Laplace noise of scale
// (hi - lo) / beta_slot. The result is not clipped again. An infinite
// beta_slot adds no noise.
absl::StatusOr<double> LaplacePerturb(double value, double lo, double hi,
                                      double beta_slot, Rng& rng);

// Smallest element v with at least tau * |values| elements <= v.
absl::StatusOr<double> PercentileAggregate(std::vector<double> values,
                                           double tau);

}  // namespace dprule

#endif  // DPRULE_LDP_H_
