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

#include "dprule/exploration.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "dprule/format.h"

namespace dprule {

absl::StatusOr<double> Score(double c_hat, int64_t v_parent, int64_t v_b,
                             const ScoreParams& sp) {
  if (v_b < 1) {
    return absl::InvalidArgumentError("score needs a visited node (v_b >= 1)");
  }
  if (sp.n < 1) return absl::InvalidArgumentError("score needs n >= 1");
  const double share = c_hat / static_cast<double>(sp.n);
  if (share < sp.v) return 0.0;
  return share + sp.c_p * std::sqrt(static_cast<double>(v_parent) /
                                    static_cast<double>(v_b));
}

ExplorationTree::ExplorationTree(GrammarConfig grammar, ScoreParams params)
    : grammar_(std::move(grammar)), params_(params) {
  nodes_.emplace_back();
  expansions_.emplace_back();
}

const std::vector<Template>& ExplorationTree::Expansion(NodeId id) {
  if (!expansions_[id]) {
    expansions_[id] = ExpandChildren(nodes_[id].rule, grammar_);
  }
  return *expansions_[id];
}

bool ExplorationTree::IsTerminal(NodeId id) { return Expansion(id).empty(); }

void ExplorationTree::Materialize(NodeId id) {
  if (nodes_[id].expanded) return;
  // Copy: emplace_back below may reallocate expansions_.
  const std::vector<Template> kids = Expansion(id);
  for (const Template& t : kids) {
    ExplorationNode child;
    child.rule = t;
    child.parent = id;
    child.depth = nodes_[id].depth + 1;
    nodes_.push_back(std::move(child));
    expansions_.emplace_back();
    nodes_[id].children.push_back(nodes_.size() - 1);
  }
  nodes_[id].expanded = true;
}

std::optional<NodeId> ExplorationTree::PolicyChild(NodeId id) const {
  const ExplorationNode& b = nodes_[id];
  for (NodeId c : b.children) {
    if (nodes_[c].visit_count == 0) return c;
  }
  std::optional<NodeId> best;
  for (NodeId c : b.children) {
    if (nodes_[c].completely_explored) continue;
    if (!best || nodes_[c].score > nodes_[*best].score) best = c;
  }
  return best;
}

ExplorationTree::Selection ExplorationTree::SelectNode(NodeId b) {
  while (true) {
    if (IsTerminal(b) || !nodes_[b].expanded) return {b, false};
    auto next = PolicyChild(b);
    if (!next) return {b, true};
    b = *next;
  }
}

NodeId ExplorationTree::ExpandNode(NodeId b) {
  if (IsTerminal(b) || nodes_[b].visit_count == 0) return b;
  Materialize(b);
  return PolicyChild(b).value_or(b);
}

double ExplorationTree::NodeScore(NodeId id) const {
  const ExplorationNode& b = nodes_[id];
  if (b.visit_count == 0 || b.responses.empty()) return 0;
  const int64_t v_parent =
      b.parent ? nodes_[*b.parent].visit_count : b.visit_count;
  const double c_hat =
      std::clamp(b.responses.back(), 0.0, static_cast<double>(params_.n));
  auto s = Score(c_hat, v_parent, b.visit_count, params_);
  return s.ok() ? *s : 0;
}

void ExplorationTree::RefreshExplored(NodeId id) {
  ExplorationNode& b = nodes_[id];
  if (b.completely_explored) return;
  if (IsTerminal(id)) {
    b.completely_explored = true;
    return;
  }
  if (!b.expanded) return;
  b.completely_explored =
      std::all_of(b.children.begin(), b.children.end(),
                  [&](NodeId c) { return nodes_[c].completely_explored; });
}

void ExplorationTree::MarkExplored(NodeId id) {
  std::optional<NodeId> cur = id;
  while (cur) {
    RefreshExplored(*cur);
    if (!nodes_[*cur].completely_explored) return;
    cur = nodes_[*cur].parent;
  }
}

void ExplorationTree::Backpropagate(NodeId b, double c_hat) {
  std::vector<NodeId> path;
  for (std::optional<NodeId> cur = b; cur; cur = nodes_[*cur].parent) {
    path.push_back(*cur);
    ExplorationNode& node = nodes_[*cur];
    node.responses.push_back(c_hat);
    ++node.visit_count;
    RefreshExplored(*cur);
  }
  // A node's score depends on its parent's visit count, so siblings of the
  // path are refreshed too.
  nodes_[root()].score = NodeScore(root());
  for (NodeId id : path) {
    for (NodeId c : nodes_[id].children) nodes_[c].score = NodeScore(c);
  }
}

std::optional<NodeId> ExplorationTree::NextQueryTarget() {
  while (!nodes_[root()].completely_explored) {
    Selection s = SelectNode(root());
    if (s.exhausted) {
      MarkExplored(s.node);
      continue;
    }
    return ExpandNode(s.node);
  }
  return std::nullopt;
}

std::string ExplorationTree::Dump() const {
  std::string out;
  std::vector<NodeId> stack = {root()};
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    const ExplorationNode& b = nodes_[id];
    absl::StrAppend(&out, b.depth, "\t", b.rule.ToString(), "\t",
                    b.visit_count, "\t", FormatDouble(b.score), "\t",
                    b.completely_explored ? 1 : 0, "\n");
    for (auto it = b.children.rbegin(); it != b.children.rend(); ++it) {
      stack.push_back(*it);
    }
  }
  return out;
}

}  // namespace dprule
