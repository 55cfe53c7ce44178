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

// Monte-Carlo exploration tree over grammar templates with a UCT-style score.

#ifndef DPRULE_EXPLORATION_H_
#define DPRULE_EXPLORATION_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dprule/grammar.h"
#include "dprule/stl.h"

namespace dprule {

using NodeId = std::size_t;

struct ExplorationNode {
  Template rule;
  int64_t visit_count = 0;
  double score = 0;
  std::vector<double> responses;  // raw estimates, oldest first
  bool completely_explored = false;
  bool expanded = false;  // children materialized
  std::vector<NodeId> children;
  std::optional<NodeId> parent;
  int depth = 0;  // root is 0
};

struct ScoreParams {
  double c_p = 0.7071067811865476;
  double v = 0.01;
  int64_t n = 1;
};

// 0 if c_hat / n < V, else c_hat / n + C_p * sqrt(v_parent / v_b).
absl::StatusOr<double> Score(double c_hat, int64_t v_parent, int64_t v_b,
                             const ScoreParams& sp);

class ExplorationTree {
 public:
  ExplorationTree(GrammarConfig grammar, ScoreParams params);

  NodeId root() const { return 0; }
  const ExplorationNode& node(NodeId id) const { return nodes_[id]; }
  std::size_t size() const { return nodes_.size(); }
  const ScoreParams& params() const { return params_; }

  // No grammar expansion exists. Computed once per node.
  bool IsTerminal(NodeId id);

  struct Selection {
    NodeId node = 0;
    // `node` is non-terminal and all of its children are completely
    // explored.
    bool exhausted = false;
  };
  // Descends from `b`: stops at terminal or unexpanded nodes, otherwise
  // enters the first unvisited child, else the highest-scoring child that is
  // not completely explored (first on ties).
  Selection SelectNode(NodeId b);

  // Returns `b` if terminal or unvisited. Otherwise materializes its
  // children if needed and returns the first unvisited child, else the
  // highest-scoring child that is not completely explored.
  NodeId ExpandNode(NodeId b);

  // Records `c_hat` on `b` and each ancestor, bumps visit counts, refreshes
  // scores and completely-explored flags.
  void Backpropagate(NodeId b, double c_hat);

  // Select then Expand from the root, marking exhausted subtrees on the way.
  // std::nullopt once the whole tree is explored.
  std::optional<NodeId> NextQueryTarget();

  // Preorder, one node per line:
  // depth \t template \t visits \t score \t explored(0|1)
  std::string Dump() const;

 private:
  const std::vector<Template>& Expansion(NodeId id);
  void Materialize(NodeId id);
  std::optional<NodeId> PolicyChild(NodeId id) const;
  double NodeScore(NodeId id) const;
  void RefreshExplored(NodeId id);
  void MarkExplored(NodeId id);

  GrammarConfig grammar_;
  ScoreParams params_;
  std::vector<ExplorationNode> nodes_;
  std::vector<std::optional<std::vector<Template>>> expansions_;
};

}  // namespace dprule

#endif  // DPRULE_EXPLORATION_H_
