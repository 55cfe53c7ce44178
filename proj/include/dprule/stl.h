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

// Signal Temporal Logic templates and rules.
//
// A Template is an immutable STL formula tree that may contain structure
// holes ("?") and unfilled parameter slots. A Template without structure
// holes is a Rule. Templates are cheap to copy: subtrees are shared.

#ifndef DPRULE_STL_H_
#define DPRULE_STL_H_

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"

namespace dprule {

enum class NodeKind {
  kProp,
  kCmp,
  kNot,
  kAnd,
  kOr,
  kImplies,
  kAlways,
  kEventually,
  kUntil,
  kHole,  // formula hole
};

enum class RelOp { kLe, kGe, kEq };

std::string_view RelOpSymbol(RelOp op);

struct Interval {
  double lo = 0;
  double hi = 0;

  friend bool operator==(const Interval&, const Interval&) = default;
};

// Interval of a temporal operator. kHole is a structure hole; kUnfilled is a
// parametric interval whose endpoints are still to be learned.
struct IntervalSlot {
  enum class State { kHole, kUnfilled, kFilled };

  State state = State::kHole;
  Interval value;

  static IntervalSlot Hole() { return {}; }
  static IntervalSlot Unfilled() { return {State::kUnfilled, {}}; }
  static IntervalSlot Filled(double lo, double hi) {
    return {State::kFilled, {lo, hi}};
  }

  bool is_hole() const { return state == State::kHole; }
  bool is_filled() const { return state == State::kFilled; }

  friend bool operator==(const IntervalSlot& a, const IntervalSlot& b) {
    return a.state == b.state &&
           (a.state != State::kFilled || a.value == b.value);
  }
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  NodeKind kind = NodeKind::kHole;
  // Proposition name, or the variable of a comparison. An empty variable on a
  // comparison is a variable hole.
  std::string name;
  RelOp relop = RelOp::kGe;
  std::optional<double> threshold;  // comparison parameter slot
  IntervalSlot interval;            // temporal operators only
  std::vector<NodePtr> children;
};

bool IsTemporal(NodeKind kind);
bool IsCommutative(NodeKind kind);

class Template {
 public:
  // The root formula hole.
  Template();
  explicit Template(NodePtr root);

  static Template Hole();
  static Template Prop(std::string name);
  // `var` empty means a variable hole.
  static Template Cmp(std::string var, RelOp op,
                      std::optional<double> threshold = std::nullopt);
  static Template Not(const Template& child);
  static Template And(const Template& lhs, const Template& rhs);
  static Template Or(const Template& lhs, const Template& rhs);
  static Template Implies(const Template& lhs, const Template& rhs);
  static Template Always(IntervalSlot interval, const Template& child);
  static Template Eventually(IntervalSlot interval, const Template& child);
  static Template Until(IntervalSlot interval, const Template& lhs,
                        const Template& rhs);

  const Node& root() const { return *root_; }
  const NodePtr& root_ptr() const { return root_; }

  // No formula, variable, or interval holes. Unfilled parameters allowed.
  bool IsComplete() const;
  // Complete and every parameter filled.
  bool IsFullyFilled() const;
  int Depth() const;

  // Surface syntax; see docs/grammar.md.
  std::string ToString() const;
  // Surface syntax with every parameter printed as "?".
  std::string StructureString() const;

  friend bool operator==(const Template& a, const Template& b);
  friend bool operator!=(const Template& a, const Template& b) {
    return !(a == b);
  }

 private:
  NodePtr root_;
};

// Names accepted by the parser.
struct Vocabulary {
  std::set<std::string> real_variables;
  std::set<std::string> propositions;
};

absl::StatusOr<Template> Parse(std::string_view text);
absl::StatusOr<Template> Parse(std::string_view text, const Vocabulary& vocab);

// Removes double negation and orders the children of every hole-free And/Or
// pair by (structure string, full string). Idempotent.
Template Canonicalize(const Template& t);

// Orders two sibling subtrees for canonical form; true if `a` sorts first or
// ties with `b`.
bool CanonicalLessOrEqual(const Template& a, const Template& b);

// Structural match: holes and unfilled parameters in `pattern` match anything,
// every specified part must coincide with `rule`. And/Or are matched up to the
// order of their children. Fails if `rule` has structure holes.
absl::StatusOr<bool> Matches(const Template& pattern, const Template& rule);

// Like Matches, but on success returns the rule's values for every unfilled
// parameter slot of `pattern`, in slot order. std::nullopt if no match.
absl::StatusOr<std::optional<std::vector<double>>> MatchBinding(
    const Template& pattern, const Template& rule);

// Unfilled comparison thresholds plus two endpoints per unfilled parametric
// interval. Fails if `t` has structure holes.
absl::StatusOr<std::size_t> CountParamSlots(const Template& t);

// Parameter slots in slot order (preorder; an interval's two endpoints before
// the children of its operator).
struct SlotRef {
  enum class Kind { kThreshold, kIntervalLo, kIntervalHi };
  Kind kind;
  std::string variable;  // for thresholds
};
std::vector<SlotRef> ListParamSlots(const Template& t);

// Fills unfilled slots in slot order. `values.size()` must equal the number
// of unfilled slots.
absl::StatusOr<Template> FillParameters(const Template& t,
                                        const std::vector<double>& values);

// Replaces every filled threshold by an unfilled slot and re-canonicalizes.
// Filled intervals are structure unless `intervals_parametric`.
Template StripParameters(const Template& t, bool intervals_parametric = false);

struct Signal {
  std::vector<double> times;
  std::map<std::string, std::vector<double>> reals;
  std::map<std::string, std::vector<bool>> props;

  std::size_t size() const { return times.size(); }
  absl::Status Validate() const;
};

// Discrete-time boolean semantics at sample `index`. A temporal window [a,b]
// covers the samples j >= index with times[j] - times[index] in [a,b]. Empty
// windows: Always is true, Eventually and Until are false.
absl::StatusOr<bool> Evaluate(const Template& rule, const Signal& signal,
                              std::size_t index);

}  // namespace dprule

#endif  // DPRULE_STL_H_
