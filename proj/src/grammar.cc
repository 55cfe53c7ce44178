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

#include "dprule/grammar.h"

#include <algorithm>
#include <optional>
#include <set>
#include <utility>

#include "absl/strings/str_cat.h"

namespace dprule {
namespace {

IntervalSlot FreshInterval(const GrammarConfig& g) {
  return g.intervals_parametric ? IntervalSlot::Unfilled()
                                : IntervalSlot::Hole();
}

// Productions for a formula hole at `depth` (root is depth 1).
std::vector<Template> Productions(int depth, bool under_not,
                                  const GrammarConfig& g) {
  std::vector<Template> out;
  for (const auto& p : g.propositions) out.push_back(Template::Prop(p));
  if (under_not) return out;
  if (!g.real_variables.empty()) {
    for (RelOp op : g.relops) out.push_back(Template::Cmp("", op));
  }
  if (depth + 1 > g.max_depth) return out;
  const Template hole;
  if (g.Allows(Operator::kNot) && !g.propositions.empty()) {
    out.push_back(Template::Not(hole));
  }
  if (g.Allows(Operator::kAnd)) out.push_back(Template::And(hole, hole));
  if (g.Allows(Operator::kOr)) out.push_back(Template::Or(hole, hole));
  if (g.Allows(Operator::kImplies)) {
    out.push_back(Template::Implies(hole, hole));
  }
  if (g.Allows(Operator::kAlways)) {
    out.push_back(Template::Always(FreshInterval(g), hole));
  }
  if (g.Allows(Operator::kEventually)) {
    out.push_back(Template::Eventually(FreshInterval(g), hole));
  }
  if (g.Allows(Operator::kUntil)) {
    out.push_back(Template::Until(FreshInterval(g), hole, hole));
  }
  return out;
}

std::vector<Interval> IntervalChoices(const GrammarConfig& g) {
  std::vector<Interval> out;
  const auto& e = g.interval_endpoints;
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (std::size_t j = i; j < e.size(); ++j) out.push_back({e[i], e[j]});
  }
  return out;
}

bool SubtreeComplete(const NodePtr& n) { return Template(n).IsComplete(); }

// Expansions of `n` with its leftmost hole substituted; std::nullopt if `n`
// has no hole.
std::optional<std::vector<NodePtr>> ExpandLeftmost(const NodePtr& n, int depth,
                                                   bool under_not,
                                                   const GrammarConfig& g) {
  if (n->kind == NodeKind::kHole) {
    std::vector<NodePtr> out;
    for (const auto& t : Productions(depth, under_not, g)) {
      out.push_back(t.root_ptr());
    }
    return out;
  }
  if (n->kind == NodeKind::kCmp && n->name.empty()) {
    std::vector<NodePtr> out;
    for (const auto& z : g.real_variables) {
      Node copy = *n;
      copy.name = z.name;
      out.push_back(std::make_shared<const Node>(std::move(copy)));
    }
    return out;
  }
  if (IsTemporal(n->kind) && n->interval.is_hole()) {
    std::vector<NodePtr> out;
    for (const Interval& iv : IntervalChoices(g)) {
      Node copy = *n;
      copy.interval = IntervalSlot::Filled(iv.lo, iv.hi);
      out.push_back(std::make_shared<const Node>(std::move(copy)));
    }
    return out;
  }
  for (std::size_t i = 0; i < n->children.size(); ++i) {
    auto sub = ExpandLeftmost(n->children[i], depth + 1,
                              n->kind == NodeKind::kNot, g);
    if (!sub) continue;
    std::vector<NodePtr> out;
    out.reserve(sub->size());
    for (auto& replacement : *sub) {
      Node copy = *n;
      copy.children[i] = std::move(replacement);
      if (IsCommutative(copy.kind) && SubtreeComplete(copy.children[0]) &&
          SubtreeComplete(copy.children[1]) &&
          !CanonicalLessOrEqual(Template(copy.children[0]),
                                Template(copy.children[1]))) {
        continue;
      }
      out.push_back(std::make_shared<const Node>(std::move(copy)));
    }
    return out;
  }
  return std::nullopt;
}

bool StructureDerivable(const Node& n, int depth, const GrammarConfig& g) {
  if (depth > g.max_depth) return false;
  switch (n.kind) {
    case NodeKind::kHole:
      return false;
    case NodeKind::kProp:
      return std::find(g.propositions.begin(), g.propositions.end(), n.name) !=
             g.propositions.end();
    case NodeKind::kCmp:
      return g.FindVariable(n.name) != nullptr &&
             std::find(g.relops.begin(), g.relops.end(), n.relop) !=
                 g.relops.end();
    case NodeKind::kNot:
      return g.Allows(Operator::kNot) &&
             n.children[0]->kind == NodeKind::kProp &&
             StructureDerivable(*n.children[0], depth + 1, g);
    case NodeKind::kAnd:
    case NodeKind::kOr:
    case NodeKind::kImplies: {
      const Operator op = n.kind == NodeKind::kAnd  ? Operator::kAnd
                          : n.kind == NodeKind::kOr ? Operator::kOr
                                                    : Operator::kImplies;
      return g.Allows(op) && StructureDerivable(*n.children[0], depth + 1, g) &&
             StructureDerivable(*n.children[1], depth + 1, g);
    }
    case NodeKind::kAlways:
    case NodeKind::kEventually:
    case NodeKind::kUntil: {
      const Operator op = n.kind == NodeKind::kAlways ? Operator::kAlways
                          : n.kind == NodeKind::kEventually
                              ? Operator::kEventually
                              : Operator::kUntil;
      if (!g.Allows(op)) return false;
      if (g.intervals_parametric) {
        if (n.interval.state != IntervalSlot::State::kUnfilled) return false;
      } else {
        if (!n.interval.is_filled()) return false;
        const auto& e = g.interval_endpoints;
        const auto& iv = n.interval.value;
        if (iv.lo > iv.hi ||
            std::find(e.begin(), e.end(), iv.lo) == e.end() ||
            std::find(e.begin(), e.end(), iv.hi) == e.end()) {
          return false;
        }
      }
      for (const auto& c : n.children) {
        if (!StructureDerivable(*c, depth + 1, g)) return false;
      }
      return true;
    }
  }
  return false;
}

}  // namespace

absl::Status GrammarConfig::Validate() const {
  if (real_variables.empty() && propositions.empty()) {
    return absl::InvalidArgumentError(
        "grammar needs at least one real variable or proposition");
  }
  if (interval_endpoints.empty()) {
    return absl::InvalidArgumentError("grammar.interval_endpoints is empty");
  }
  for (std::size_t i = 0; i < interval_endpoints.size(); ++i) {
    if (interval_endpoints[i] < 0) {
      return absl::InvalidArgumentError(
          "grammar.interval_endpoints must be nonnegative");
    }
    if (i > 0 && !(interval_endpoints[i] > interval_endpoints[i - 1])) {
      return absl::InvalidArgumentError(
          "grammar.interval_endpoints must be strictly increasing");
    }
  }
  if (max_depth < 1) {
    return absl::InvalidArgumentError("grammar.max_depth must be >= 1");
  }
  std::set<std::string> names;
  for (const auto& z : real_variables) {
    if (!(z.lo < z.hi)) {
      return absl::InvalidArgumentError(
          absl::StrCat("variable '", z.name, "' needs lo < hi"));
    }
    if (!names.insert(z.name).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate variable '", z.name, "'"));
    }
  }
  for (const auto& p : propositions) {
    if (!names.insert(p).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate variable '", p, "'"));
    }
  }
  return absl::OkStatus();
}

Vocabulary GrammarConfig::vocabulary() const {
  Vocabulary v;
  for (const auto& z : real_variables) v.real_variables.insert(z.name);
  v.propositions.insert(propositions.begin(), propositions.end());
  return v;
}

bool GrammarConfig::Allows(Operator op) const {
  return std::find(operators.begin(), operators.end(), op) != operators.end();
}

const RealVariable* GrammarConfig::FindVariable(const std::string& name) const {
  for (const auto& z : real_variables) {
    if (z.name == name) return &z;
  }
  return nullptr;
}

double GrammarConfig::MaxEndpoint() const {
  return interval_endpoints.empty() ? 0 : interval_endpoints.back();
}

std::vector<Template> ExpandChildren(const Template& t, const GrammarConfig& g) {
  auto expanded = ExpandLeftmost(t.root_ptr(), 1, false, g);
  if (!expanded) return {};
  std::vector<Template> out;
  std::set<std::string> seen;
  for (auto& n : *expanded) {
    Template child = Canonicalize(Template(std::move(n)));
    if (seen.insert(child.ToString()).second) out.push_back(std::move(child));
  }
  return out;
}

absl::StatusOr<std::vector<Template>> EnumerateRules(const GrammarConfig& g,
                                                     std::size_t limit) {
  std::vector<Template> rules;
  std::vector<Template> stack = {Template::Hole()};
  std::size_t visited = 0;
  while (!stack.empty()) {
    Template t = std::move(stack.back());
    stack.pop_back();
    if (++visited > limit) {
      return absl::ResourceExhaustedError(
          absl::StrCat("grammar has more than ", limit, " derivation nodes"));
    }
    if (t.IsComplete()) {
      rules.push_back(std::move(t));
      continue;
    }
    auto kids = ExpandChildren(t, g);
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) {
      stack.push_back(std::move(*it));
    }
  }
  return rules;
}

bool IsDerivable(const Template& rule, const GrammarConfig& g) {
  if (!rule.IsComplete()) return false;
  const Template s = StripParameters(rule, g.intervals_parametric);
  return StructureDerivable(s.root(), 1, g);
}

}  // namespace dprule
