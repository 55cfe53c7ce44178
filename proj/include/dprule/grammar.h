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

// The finite rule grammar searched by the exploration tree.

#ifndef DPRULE_GRAMMAR_H_
#define DPRULE_GRAMMAR_H_

#include <cstddef>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dprule/stl.h"

namespace dprule {

enum class Operator { kNot, kAnd, kOr, kImplies, kAlways, kEventually, kUntil };

struct RealVariable {
  std::string name;
  double lo = 0;
  double hi = 1;
};

struct GrammarConfig {
  std::vector<RealVariable> real_variables;
  std::vector<std::string> propositions;
  std::vector<RelOp> relops;
  std::vector<Operator> operators;
  std::vector<double> interval_endpoints;  // sorted, nonnegative
  int max_depth = 3;
  // Interval endpoints become parameter slots instead of structure.
  bool intervals_parametric = false;

  absl::Status Validate() const;
  Vocabulary vocabulary() const;
  bool Allows(Operator op) const;
  const RealVariable* FindVariable(const std::string& name) const;
  double MaxEndpoint() const;
};

// Children of `t` in the exploration tree: every template obtained by
// replacing the leftmost (preorder) hole of `t` with one production. Empty for
// complete rules. Productions deeper than max_depth are omitted, and an
// And/Or whose children are both complete but out of canonical order is
// dropped (the ordered twin is produced instead), so every canonical rule has
// exactly one derivation.
std::vector<Template> ExpandChildren(const Template& t, const GrammarConfig& g);

// All complete rules reachable from the root hole, in depth-first derivation
// order. Fails once more than `limit` tree nodes have been visited.
absl::StatusOr<std::vector<Template>> EnumerateRules(const GrammarConfig& g,
                                                     std::size_t limit);

// True if the parameter-free structure of `rule` is a complete rule this
// grammar can derive (up to the order of And/Or children).
bool IsDerivable(const Template& rule, const GrammarConfig& g);

}  // namespace dprule

#endif  // DPRULE_GRAMMAR_H_
