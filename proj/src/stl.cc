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

#include "dprule/stl.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <utility>

#include "absl/strings/str_cat.h"
#include "dprule/format.h"

namespace dprule {
namespace {

NodePtr MakeNode(Node node) { return std::make_shared<const Node>(std::move(node)); }

NodePtr MakeUnary(NodeKind kind, IntervalSlot interval, NodePtr child) {
  Node n;
  n.kind = kind;
  n.interval = interval;
  n.children = {std::move(child)};
  return MakeNode(std::move(n));
}

NodePtr MakeBinary(NodeKind kind, IntervalSlot interval, NodePtr lhs,
                   NodePtr rhs) {
  Node n;
  n.kind = kind;
  n.interval = interval;
  n.children = {std::move(lhs), std::move(rhs)};
  return MakeNode(std::move(n));
}

NodePtr WithChildren(const Node& base, std::vector<NodePtr> children) {
  Node n = base;
  n.children = std::move(children);
  return MakeNode(std::move(n));
}

bool NodeComplete(const Node& n) {
  switch (n.kind) {
    case NodeKind::kHole:
      return false;
    case NodeKind::kCmp:
      return !n.name.empty();
    default:
      break;
  }
  if (IsTemporal(n.kind) && n.interval.is_hole()) return false;
  for (const auto& c : n.children) {
    if (!NodeComplete(*c)) return false;
  }
  return true;
}

bool NodeFullyFilled(const Node& n) {
  if (n.kind == NodeKind::kHole) return false;
  if (n.kind == NodeKind::kCmp && (n.name.empty() || !n.threshold)) {
    return false;
  }
  if (IsTemporal(n.kind) && !n.interval.is_filled()) return false;
  for (const auto& c : n.children) {
    if (!NodeFullyFilled(*c)) return false;
  }
  return true;
}

int NodeDepth(const Node& n) {
  int d = 0;
  for (const auto& c : n.children) d = std::max(d, NodeDepth(*c));
  return d + 1;
}

bool NodeEqual(const Node& a, const Node& b) {
  if (&a == &b) return true;
  if (a.kind != b.kind || a.children.size() != b.children.size()) return false;
  switch (a.kind) {
    case NodeKind::kProp:
      if (a.name != b.name) return false;
      break;
    case NodeKind::kCmp:
      if (a.name != b.name || a.relop != b.relop || a.threshold != b.threshold) {
        return false;
      }
      break;
    default:
      break;
  }
  if (IsTemporal(a.kind) && !(a.interval == b.interval)) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i) {
    if (!NodeEqual(*a.children[i], *b.children[i])) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Serialization

std::string IntervalText(const IntervalSlot& slot) {
  switch (slot.state) {
    case IntervalSlot::State::kHole:
      return "[?]";
    case IntervalSlot::State::kUnfilled:
      return "[?,?]";
    case IntervalSlot::State::kFilled:
      return absl::StrCat("[", FormatDouble(slot.value.lo), ",",
                          FormatDouble(slot.value.hi), "]");
  }
  return "";
}

bool IsBinaryShape(NodeKind k) {
  return k == NodeKind::kAnd || k == NodeKind::kOr || k == NodeKind::kImplies ||
         k == NodeKind::kUntil;
}

void Serialize(const Node& n, bool structure_only, std::string& out) {
  switch (n.kind) {
    case NodeKind::kHole:
      out += '?';
      return;
    case NodeKind::kProp:
      out += n.name;
      return;
    case NodeKind::kCmp:
      out += n.name.empty() ? "?" : n.name;
      out += ' ';
      out += RelOpSymbol(n.relop);
      out += ' ';
      if (n.threshold && !structure_only) {
        out += FormatDouble(*n.threshold);
      } else {
        out += '?';
      }
      return;
    case NodeKind::kNot:
      out += '!';
      Serialize(*n.children[0], structure_only, out);
      return;
    case NodeKind::kAnd:
    case NodeKind::kOr:
    case NodeKind::kImplies: {
      const char* op = n.kind == NodeKind::kAnd  ? " & "
                       : n.kind == NodeKind::kOr ? " | "
                                                 : " -> ";
      out += '(';
      Serialize(*n.children[0], structure_only, out);
      out += op;
      Serialize(*n.children[1], structure_only, out);
      out += ')';
      return;
    }
    case NodeKind::kUntil:
      out += '(';
      Serialize(*n.children[0], structure_only, out);
      out += " U";
      out += IntervalText(n.interval);
      out += ' ';
      Serialize(*n.children[1], structure_only, out);
      out += ')';
      return;
    case NodeKind::kAlways:
    case NodeKind::kEventually: {
      out += n.kind == NodeKind::kAlways ? 'G' : 'F';
      out += IntervalText(n.interval);
      const Node& body = *n.children[0];
      if (IsBinaryShape(body.kind)) {
        Serialize(body, structure_only, out);
      } else {
        out += '(';
        Serialize(body, structure_only, out);
        out += ')';
      }
      return;
    }
  }
}

// ---------------------------------------------------------------------------
// Parsing

class Parser {
 public:
  Parser(std::string_view text, const Vocabulary* vocab)
      : text_(text), vocab_(vocab) {}

  absl::StatusOr<NodePtr> ParseAll() {
    auto f = ParseFormula();
    if (!f.ok()) return f.status();
    SkipSpace();
    if (pos_ != text_.size()) return Error("unexpected trailing input");
    return f;
  }

 private:
  absl::Status Error(std::string_view what) const {
    return absl::InvalidArgumentError(
        absl::StrCat("syntax error at position ", pos_, ": ",
                     std::string(what)));
  }

  void SkipSpace() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  bool Peek(std::string_view tok) {
    SkipSpace();
    return text_.substr(pos_, tok.size()) == tok;
  }

  bool Consume(std::string_view tok) {
    if (!Peek(tok)) return false;
    pos_ += tok.size();
    return true;
  }

  static bool IsIdentStart(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
  }
  static bool IsIdentChar(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  }

  // Identifier at the cursor without consuming it.
  std::string_view PeekIdent() {
    SkipSpace();
    if (pos_ >= text_.size() || !IsIdentStart(text_[pos_])) return {};
    std::size_t end = pos_;
    while (end < text_.size() && IsIdentChar(text_[end])) ++end;
    return text_.substr(pos_, end - pos_);
  }

  // True if the cursor is at keyword `kw` immediately followed by '['.
  bool AtIntervalKeyword(std::string_view kw) {
    std::string_view id = PeekIdent();
    return id == kw && pos_ + kw.size() < text_.size() &&
           text_[pos_ + kw.size()] == '[';
  }

  absl::StatusOr<double> ParseNumber() {
    SkipSpace();
    std::size_t start = pos_;
    std::size_t end = pos_;
    if (end < text_.size() && (text_[end] == '-' || text_[end] == '+')) ++end;
    while (end < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[end])) ||
            text_[end] == '.' || text_[end] == 'e' || text_[end] == 'E' ||
            ((text_[end] == '-' || text_[end] == '+') && end > start &&
             (text_[end - 1] == 'e' || text_[end - 1] == 'E')))) {
      ++end;
    }
    const char* first = text_.data() + start;
    if (start < text_.size() && text_[start] == '+') ++first;
    double value = 0;
    auto [ptr, ec] = std::from_chars(first, text_.data() + end, value);
    if (ec != std::errc() || ptr != text_.data() + end || end == start) {
      return Error("expected a number");
    }
    if (!std::isfinite(value)) return Error("number out of range");
    pos_ = end;
    return value;
  }

  absl::StatusOr<IntervalSlot> ParseInterval() {
    if (!Consume("[")) return Error("expected '['");
    if (Consume("?")) {
      if (Consume("]")) return IntervalSlot::Hole();
      if (!Consume(",")) return Error("expected ',' or ']'");
      if (!Consume("?")) {
        return Error("malformed interval: mixed '?' and number endpoints");
      }
      if (!Consume("]")) return Error("expected ']'");
      return IntervalSlot::Unfilled();
    }
    auto lo = ParseNumber();
    if (!lo.ok()) return lo.status();
    if (!Consume(",")) return Error("expected ','");
    if (Peek("?")) {
      return Error("malformed interval: mixed '?' and number endpoints");
    }
    auto hi = ParseNumber();
    if (!hi.ok()) return hi.status();
    if (!Consume("]")) return Error("expected ']'");
    if (*lo < 0) return Error("malformed interval: negative endpoint");
    if (*lo > *hi) {
      return Error(absl::StrCat("malformed interval: lower bound ",
                                FormatDouble(*lo), " exceeds upper bound ",
                                FormatDouble(*hi)));
    }
    return IntervalSlot::Filled(*lo, *hi);
  }

  absl::StatusOr<NodePtr> ParseFormula() {
    auto lhs = ParseOr();
    if (!lhs.ok()) return lhs;
    if (Consume("->")) {
      auto rhs = ParseFormula();
      if (!rhs.ok()) return rhs;
      return MakeBinary(NodeKind::kImplies, {}, *std::move(lhs),
                        *std::move(rhs));
    }
    return lhs;
  }

  absl::StatusOr<NodePtr> ParseOr() {
    auto lhs = ParseAnd();
    if (!lhs.ok()) return lhs;
    NodePtr acc = *std::move(lhs);
    while (Consume("|")) {
      auto rhs = ParseAnd();
      if (!rhs.ok()) return rhs;
      acc = MakeBinary(NodeKind::kOr, {}, std::move(acc), *std::move(rhs));
    }
    return acc;
  }

  absl::StatusOr<NodePtr> ParseAnd() {
    auto lhs = ParseUnary();
    if (!lhs.ok()) return lhs;
    NodePtr acc = *std::move(lhs);
    while (Consume("&")) {
      auto rhs = ParseUnary();
      if (!rhs.ok()) return rhs;
      acc = MakeBinary(NodeKind::kAnd, {}, std::move(acc), *std::move(rhs));
    }
    return acc;
  }

  absl::StatusOr<NodePtr> ParseUnary() {
    if (Consume("!")) {
      auto child = ParseUnary();
      if (!child.ok()) return child;
      return MakeUnary(NodeKind::kNot, {}, *std::move(child));
    }
    for (auto [kw, kind] : {std::pair{"G", NodeKind::kAlways},
                            std::pair{"F", NodeKind::kEventually}}) {
      if (AtIntervalKeyword(kw)) {
        pos_ += 1;
        auto interval = ParseInterval();
        if (!interval.ok()) return interval.status();
        auto body = ParseUnary();
        if (!body.ok()) return body;
        return MakeUnary(kind, *interval, *std::move(body));
      }
    }
    return ParsePrimary();
  }

  absl::StatusOr<NodePtr> ParsePrimary() {
    if (Consume("(")) {
      auto lhs = ParseFormula();
      if (!lhs.ok()) return lhs;
      if (AtIntervalKeyword("U")) {
        pos_ += 1;
        auto interval = ParseInterval();
        if (!interval.ok()) return interval.status();
        auto rhs = ParseFormula();
        if (!rhs.ok()) return rhs;
        if (!Consume(")")) return Error("expected ')'");
        return MakeBinary(NodeKind::kUntil, *interval, *std::move(lhs),
                          *std::move(rhs));
      }
      if (!Consume(")")) return Error("expected ')'");
      return lhs;
    }
    return ParseAtom();
  }

  std::optional<RelOp> ConsumeRelOp() {
    if (Consume(">=")) return RelOp::kGe;
    if (Consume("<=")) return RelOp::kLe;
    if (Consume("=")) return RelOp::kEq;
    return std::nullopt;
  }

  absl::StatusOr<NodePtr> ParseComparison(std::string var) {
    std::size_t at = pos_;
    auto op = ConsumeRelOp();
    if (!op) return Error("expected a comparison operator");
    Node n;
    n.kind = NodeKind::kCmp;
    n.name = std::move(var);
    n.relop = *op;
    if (!Consume("?")) {
      auto v = ParseNumber();
      if (!v.ok()) return v.status();
      n.threshold = *v;
    }
    if (vocab_ != nullptr && !n.name.empty() &&
        !vocab_->real_variables.contains(n.name)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "unknown real variable '", n.name, "' at position ", at));
    }
    return MakeNode(std::move(n));
  }

  absl::StatusOr<NodePtr> ParseAtom() {
    SkipSpace();
    if (Consume("?")) {
      if (Peek(">=") || Peek("<=") || Peek("=")) {
        return ParseComparison("");
      }
      return MakeNode(Node{});
    }
    std::string_view id = PeekIdent();
    if (id.empty()) return Error("expected a formula");
    std::size_t at = pos_;
    pos_ += id.size();
    std::string name(id);
    if (Peek(">=") || Peek("<=") || Peek("=")) {
      return ParseComparison(std::move(name));
    }
    if (vocab_ != nullptr && !vocab_->propositions.contains(name)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "unknown proposition '", name, "' at position ", at));
    }
    Node n;
    n.kind = NodeKind::kProp;
    n.name = std::move(name);
    return MakeNode(std::move(n));
  }

  std::string_view text_;
  const Vocabulary* vocab_;
  std::size_t pos_ = 0;
};

// Not may sit only above a proposition or a formula hole once double
// negations are removed.
bool NegationWellPlaced(const Node& n) {
  if (n.kind == NodeKind::kNot) {
    const Node* c = n.children[0].get();
    int depth = 1;
    while (c->kind == NodeKind::kNot) {
      c = c->children[0].get();
      ++depth;
    }
    if (depth % 2 == 1 && c->kind != NodeKind::kProp &&
        c->kind != NodeKind::kHole) {
      return false;
    }
    return NegationWellPlaced(*c);
  }
  for (const auto& ch : n.children) {
    if (!NegationWellPlaced(*ch)) return false;
  }
  return true;
}

absl::StatusOr<Template> ParseImpl(std::string_view text,
                                   const Vocabulary* vocab) {
  Parser parser(text, vocab);
  auto root = parser.ParseAll();
  if (!root.ok()) return root.status();
  if (!NegationWellPlaced(**root)) {
    return absl::InvalidArgumentError(
        "negation may only apply to a proposition or '?'");
  }
  return Template(*std::move(root));
}

// ---------------------------------------------------------------------------
// Canonical form

NodePtr CanonicalNode(const NodePtr& n) {
  if (n->children.empty()) return n;
  std::vector<NodePtr> kids;
  kids.reserve(n->children.size());
  for (const auto& c : n->children) kids.push_back(CanonicalNode(c));
  if (n->kind == NodeKind::kNot && kids[0]->kind == NodeKind::kNot) {
    return kids[0]->children[0];
  }
  if (IsCommutative(n->kind) && NodeComplete(*kids[0]) &&
      NodeComplete(*kids[1]) &&
      !CanonicalLessOrEqual(Template(kids[0]), Template(kids[1]))) {
    std::swap(kids[0], kids[1]);
  }
  return WithChildren(*n, std::move(kids));
}

// ---------------------------------------------------------------------------
// Matching

bool MatchNode(const Node& p, const Node& r, std::vector<double>* bound) {
  if (p.kind == NodeKind::kHole) return true;
  if (p.kind != r.kind) return false;
  const std::size_t mark = bound != nullptr ? bound->size() : 0;
  auto rollback = [&] {
    if (bound != nullptr) bound->resize(mark);
  };
  switch (p.kind) {
    case NodeKind::kProp:
      return p.name == r.name;
    case NodeKind::kCmp:
      if (!p.name.empty() && p.name != r.name) return false;
      if (p.relop != r.relop) return false;
      if (p.threshold) return r.threshold && *p.threshold == *r.threshold;
      if (bound != nullptr) {
        bound->push_back(r.threshold.value_or(
            std::numeric_limits<double>::quiet_NaN()));
      }
      return true;
    default:
      break;
  }
  if (IsTemporal(p.kind)) {
    switch (p.interval.state) {
      case IntervalSlot::State::kHole:
        break;
      case IntervalSlot::State::kUnfilled:
        if (bound != nullptr) {
          const double nan = std::numeric_limits<double>::quiet_NaN();
          bound->push_back(r.interval.is_filled() ? r.interval.value.lo : nan);
          bound->push_back(r.interval.is_filled() ? r.interval.value.hi : nan);
        }
        break;
      case IntervalSlot::State::kFilled:
        if (!r.interval.is_filled() || !(r.interval.value == p.interval.value)) {
          return false;
        }
        break;
    }
  }
  if (p.children.size() == 2 && IsCommutative(p.kind)) {
    const std::size_t inner = bound != nullptr ? bound->size() : 0;
    if (MatchNode(*p.children[0], *r.children[0], bound) &&
        MatchNode(*p.children[1], *r.children[1], bound)) {
      return true;
    }
    if (bound != nullptr) bound->resize(inner);
    if (MatchNode(*p.children[0], *r.children[1], bound) &&
        MatchNode(*p.children[1], *r.children[0], bound)) {
      return true;
    }
    rollback();
    return false;
  }
  for (std::size_t i = 0; i < p.children.size(); ++i) {
    if (!MatchNode(*p.children[i], *r.children[i], bound)) {
      rollback();
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Parameters

void CollectSlots(const Node& n, std::vector<SlotRef>& out) {
  if (IsTemporal(n.kind) && n.interval.state == IntervalSlot::State::kUnfilled) {
    out.push_back({SlotRef::Kind::kIntervalLo, ""});
    out.push_back({SlotRef::Kind::kIntervalHi, ""});
  }
  if (n.kind == NodeKind::kCmp && !n.threshold) {
    out.push_back({SlotRef::Kind::kThreshold, n.name});
  }
  for (const auto& c : n.children) CollectSlots(*c, out);
}

NodePtr FillNode(const NodePtr& n, const std::vector<double>& values,
                 std::size_t& next) {
  Node copy = *n;
  if (IsTemporal(copy.kind) &&
      copy.interval.state == IntervalSlot::State::kUnfilled) {
    const double lo = values[next++];
    const double hi = values[next++];
    copy.interval = IntervalSlot::Filled(lo, hi);
  }
  if (copy.kind == NodeKind::kCmp && !copy.threshold) {
    copy.threshold = values[next++];
  }
  for (auto& c : copy.children) c = FillNode(c, values, next);
  return MakeNode(std::move(copy));
}

NodePtr StripNode(const NodePtr& n, bool intervals_parametric) {
  Node copy = *n;
  if (copy.kind == NodeKind::kCmp) copy.threshold.reset();
  if (intervals_parametric && IsTemporal(copy.kind) &&
      copy.interval.is_filled()) {
    copy.interval = IntervalSlot::Unfilled();
  }
  for (auto& c : copy.children) c = StripNode(c, intervals_parametric);
  return MakeNode(std::move(copy));
}

// ---------------------------------------------------------------------------
// Evaluation

absl::Status CheckSignalCoverage(const Node& n, const Signal& s) {
  if (n.kind == NodeKind::kProp && !s.props.contains(n.name)) {
    return absl::NotFoundError(
        absl::StrCat("proposition '", n.name, "' absent from signal"));
  }
  if (n.kind == NodeKind::kCmp && !s.reals.contains(n.name)) {
    return absl::NotFoundError(
        absl::StrCat("variable '", n.name, "' absent from signal"));
  }
  for (const auto& c : n.children) {
    if (auto st = CheckSignalCoverage(*c, s); !st.ok()) return st;
  }
  return absl::OkStatus();
}

class Evaluator {
 public:
  explicit Evaluator(const Signal& s) : s_(s) {}

  bool Eval(const Node& n, std::size_t i) const {
    switch (n.kind) {
      case NodeKind::kProp:
        return s_.props.at(n.name)[i];
      case NodeKind::kCmp: {
        const double v = s_.reals.at(n.name)[i];
        switch (n.relop) {
          case RelOp::kLe:
            return v <= *n.threshold;
          case RelOp::kGe:
            return v >= *n.threshold;
          case RelOp::kEq:
            return v == *n.threshold;
        }
        return false;
      }
      case NodeKind::kNot:
        return !Eval(*n.children[0], i);
      case NodeKind::kAnd:
        return Eval(*n.children[0], i) && Eval(*n.children[1], i);
      case NodeKind::kOr:
        return Eval(*n.children[0], i) || Eval(*n.children[1], i);
      case NodeKind::kImplies:
        return !Eval(*n.children[0], i) || Eval(*n.children[1], i);
      case NodeKind::kAlways: {
        auto [first, last] = Window(i, n.interval.value);
        for (std::size_t j = first; j < last; ++j) {
          if (!Eval(*n.children[0], j)) return false;
        }
        return true;
      }
      case NodeKind::kEventually: {
        auto [first, last] = Window(i, n.interval.value);
        for (std::size_t j = first; j < last; ++j) {
          if (Eval(*n.children[0], j)) return true;
        }
        return false;
      }
      case NodeKind::kUntil: {
        auto [first, last] = Window(i, n.interval.value);
        // lhs must hold on every sample in [i, j).
        for (std::size_t j = i; j < last; ++j) {
          if (j >= first && Eval(*n.children[1], j)) return true;
          if (!Eval(*n.children[0], j)) return false;
        }
        return false;
      }
      case NodeKind::kHole:
        break;
    }
    return false;
  }

 private:
  // Half-open index range of samples whose offset from times[i] lies in
  // [iv.lo, iv.hi].
  std::pair<std::size_t, std::size_t> Window(std::size_t i,
                                             const Interval& iv) const {
    const auto& t = s_.times;
    const double t0 = t[i];
    auto begin = t.begin() + static_cast<std::ptrdiff_t>(i);
    auto lo = std::partition_point(begin, t.end(),
                                   [&](double tj) { return tj - t0 < iv.lo; });
    auto hi = std::partition_point(lo, t.end(),
                                   [&](double tj) { return tj - t0 <= iv.hi; });
    return {static_cast<std::size_t>(lo - t.begin()),
            static_cast<std::size_t>(hi - t.begin())};
  }

  const Signal& s_;
};

}  // namespace

std::string_view RelOpSymbol(RelOp op) {
  switch (op) {
    case RelOp::kLe:
      return "<=";
    case RelOp::kGe:
      return ">=";
    case RelOp::kEq:
      return "=";
  }
  return "?";
}

bool IsTemporal(NodeKind kind) {
  return kind == NodeKind::kAlways || kind == NodeKind::kEventually ||
         kind == NodeKind::kUntil;
}

bool IsCommutative(NodeKind kind) {
  return kind == NodeKind::kAnd || kind == NodeKind::kOr;
}

Template::Template() : root_(MakeNode(Node{})) {}
Template::Template(NodePtr root) : root_(std::move(root)) {}

Template Template::Hole() { return Template(); }

Template Template::Prop(std::string name) {
  Node n;
  n.kind = NodeKind::kProp;
  n.name = std::move(name);
  return Template(MakeNode(std::move(n)));
}

Template Template::Cmp(std::string var, RelOp op,
                       std::optional<double> threshold) {
  Node n;
  n.kind = NodeKind::kCmp;
  n.name = std::move(var);
  n.relop = op;
  n.threshold = threshold;
  return Template(MakeNode(std::move(n)));
}

Template Template::Not(const Template& child) {
  return Template(MakeUnary(NodeKind::kNot, {}, child.root_));
}
Template Template::And(const Template& lhs, const Template& rhs) {
  return Template(MakeBinary(NodeKind::kAnd, {}, lhs.root_, rhs.root_));
}
Template Template::Or(const Template& lhs, const Template& rhs) {
  return Template(MakeBinary(NodeKind::kOr, {}, lhs.root_, rhs.root_));
}
Template Template::Implies(const Template& lhs, const Template& rhs) {
  return Template(MakeBinary(NodeKind::kImplies, {}, lhs.root_, rhs.root_));
}
Template Template::Always(IntervalSlot interval, const Template& child) {
  return Template(MakeUnary(NodeKind::kAlways, interval, child.root_));
}
Template Template::Eventually(IntervalSlot interval, const Template& child) {
  return Template(MakeUnary(NodeKind::kEventually, interval, child.root_));
}
Template Template::Until(IntervalSlot interval, const Template& lhs,
                         const Template& rhs) {
  return Template(
      MakeBinary(NodeKind::kUntil, interval, lhs.root_, rhs.root_));
}

bool Template::IsComplete() const { return NodeComplete(*root_); }
bool Template::IsFullyFilled() const { return NodeFullyFilled(*root_); }
int Template::Depth() const { return NodeDepth(*root_); }

std::string Template::ToString() const {
  std::string out;
  Serialize(*root_, false, out);
  return out;
}

std::string Template::StructureString() const {
  std::string out;
  Serialize(*root_, true, out);
  return out;
}

bool operator==(const Template& a, const Template& b) {
  return NodeEqual(*a.root_, *b.root_);
}

absl::StatusOr<Template> Parse(std::string_view text) {
  return ParseImpl(text, nullptr);
}

absl::StatusOr<Template> Parse(std::string_view text, const Vocabulary& vocab) {
  return ParseImpl(text, &vocab);
}

Template Canonicalize(const Template& t) {
  return Template(CanonicalNode(t.root_ptr()));
}

bool CanonicalLessOrEqual(const Template& a, const Template& b) {
  const std::string sa = a.StructureString();
  const std::string sb = b.StructureString();
  if (sa != sb) return sa < sb;
  return a.ToString() <= b.ToString();
}

absl::StatusOr<bool> Matches(const Template& pattern, const Template& rule) {
  if (!rule.IsComplete()) {
    return absl::InvalidArgumentError(
        absl::StrCat("cannot match against a rule with holes: ",
                     rule.ToString()));
  }
  return MatchNode(pattern.root(), rule.root(), nullptr);
}

absl::StatusOr<std::optional<std::vector<double>>> MatchBinding(
    const Template& pattern, const Template& rule) {
  if (!rule.IsComplete()) {
    return absl::InvalidArgumentError(
        absl::StrCat("cannot match against a rule with holes: ",
                     rule.ToString()));
  }
  std::vector<double> bound;
  if (!MatchNode(pattern.root(), rule.root(), &bound)) {
    return std::optional<std::vector<double>>();
  }
  return std::optional<std::vector<double>>(std::move(bound));
}

absl::StatusOr<std::size_t> CountParamSlots(const Template& t) {
  if (!t.IsComplete()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "parameter slots are defined only for complete rules: ", t.ToString()));
  }
  return ListParamSlots(t).size();
}

std::vector<SlotRef> ListParamSlots(const Template& t) {
  std::vector<SlotRef> out;
  CollectSlots(t.root(), out);
  return out;
}

absl::StatusOr<Template> FillParameters(const Template& t,
                                        const std::vector<double>& values) {
  const std::size_t need = ListParamSlots(t).size();
  if (values.size() != need) {
    return absl::InvalidArgumentError(
        absl::StrCat("expected ", need, " parameter values, got ",
                     values.size()));
  }
  std::size_t next = 0;
  return Template(FillNode(t.root_ptr(), values, next));
}

Template StripParameters(const Template& t, bool intervals_parametric) {
  return Canonicalize(Template(StripNode(t.root_ptr(), intervals_parametric)));
}

absl::Status Signal::Validate() const {
  if (times.empty()) {
    return absl::InvalidArgumentError("signal has no samples");
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0)) {
      return absl::InvalidArgumentError("signal timestamps must be >= 0");
    }
    if (i > 0 && !(times[i] > times[i - 1])) {
      return absl::InvalidArgumentError(
          "signal timestamps must be strictly increasing");
    }
  }
  for (const auto& [name, series] : reals) {
    if (series.size() != times.size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("series '", name, "' is not aligned with timestamps"));
    }
  }
  for (const auto& [name, series] : props) {
    if (series.size() != times.size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("series '", name, "' is not aligned with timestamps"));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<bool> Evaluate(const Template& rule, const Signal& signal,
                              std::size_t index) {
  if (!rule.IsFullyFilled()) {
    return absl::InvalidArgumentError(
        absl::StrCat("rule has holes or unfilled parameters: ",
                     rule.ToString()));
  }
  if (auto st = signal.Validate(); !st.ok()) return st;
  if (index >= signal.size()) {
    return absl::OutOfRangeError(
        absl::StrCat("sample index ", index, " out of range"));
  }
  if (auto st = CheckSignalCoverage(rule.root(), signal); !st.ok()) return st;
  return Evaluator(signal).Eval(rule.root(), index);
}

}  // namespace dprule
