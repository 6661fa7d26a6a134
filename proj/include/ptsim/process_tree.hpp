#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ptsim/error.hpp"

namespace ptsim {

enum class NodeKind { Activity, Silent, Sequence, Xor, Parallel, Loop };

inline bool is_operator(NodeKind k) noexcept { return k != NodeKind::Activity && k != NodeKind::Silent; }

inline std::string_view operator_symbol(NodeKind k) {
  switch (k) {
    case NodeKind::Sequence: return "->";
    case NodeKind::Xor: return "X";
    case NodeKind::Parallel: return "+";
    case NodeKind::Loop: return "*";
    case NodeKind::Silent: return "tau";
    case NodeKind::Activity: break;
  }
  return "";
}

struct TreeNode {
  NodeKind kind = NodeKind::Silent;
  std::string label;          // Activity leaves only
  std::vector<int> children;  // node ids, in order
  int parent = -1;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// An (operator, direct child) pair. child_activity is set when the child is
// an activity leaf.
struct TreeEdge {
  int parent_id = 0;
  int child_index = 0;
  std::optional<std::string> child_activity;

  friend bool operator==(const TreeEdge& a, const TreeEdge& b) {
    return a.parent_id == b.parent_id && a.child_index == b.child_index;
  }
  friend bool operator<(const TreeEdge& a, const TreeEdge& b) {
    return a.parent_id != b.parent_id ? a.parent_id < b.parent_id : a.child_index < b.child_index;
  }
};

// ProcessTree ---------------------------------------------------------------
//
// Nodes are stored flat in pre-order; a node's id is its index and the root
// is node 0. Loops with more than two children are normalized on construction
// to LOOP(do, XOR(redo_1, ..., redo_n)) so each loop has exactly one redo
// child.
class ProcessTree {
 public:
  ProcessTree() : _nodes{TreeNode{}} {}

  static ProcessTree silent() { return ProcessTree{}; }

  static ProcessTree activity(std::string label) {
    ProcessTree t;
    t._nodes[0].kind = NodeKind::Activity;
    t._nodes[0].label = std::move(label);
    return t;
  }

  static ProcessTree op(NodeKind kind, std::vector<ProcessTree> children) {
    if (!is_operator(kind)) throw Error("ArityError", "leaf kind used as operator");
    if (children.empty()) throw Error("ArityError", std::string(operator_symbol(kind)) + " requires at least one child");
    if (kind == NodeKind::Loop) {
      if (children.size() < 2) throw Error("ArityError", "loop requires at least two children");
      if (children.size() > 2) {
        std::vector<ProcessTree> redo(std::make_move_iterator(children.begin() + 1),
                                      std::make_move_iterator(children.end()));
        children.resize(1);
        children.push_back(op(NodeKind::Xor, std::move(redo)));
      }
    }
    ProcessTree t;
    t._nodes[0].kind = kind;
    for (auto& c : children) {
      const int offset = static_cast<int>(t._nodes.size());
      t._nodes[0].children.push_back(offset);
      for (auto node : c._nodes) {
        for (auto& ch : node.children) ch += offset;
        node.parent = node.parent < 0 ? 0 : node.parent + offset;
        t._nodes.push_back(std::move(node));
      }
    }
    return t;
  }

  const TreeNode& node(int id) const { return _nodes.at(static_cast<std::size_t>(id)); }
  const TreeNode& root() const { return _nodes.front(); }
  int size() const noexcept { return static_cast<int>(_nodes.size()); }
  const std::vector<TreeNode>& nodes() const noexcept { return _nodes; }

  // Copy of the subtree rooted at id, renumbered from 0.
  ProcessTree subtree(int id) const {
    const auto& n = node(id);
    if (n.kind == NodeKind::Silent) return silent();
    if (n.kind == NodeKind::Activity) return activity(n.label);
    std::vector<ProcessTree> children;
    for (int c : n.children) children.push_back(subtree(c));
    return op(n.kind, std::move(children));
  }

  // Returns a new tree where the subtree at id is replaced by `replacement`.
  ProcessTree replace(int id, const ProcessTree& replacement) const { return rebuild(0, id, replacement); }

  std::set<std::string> activities() const {
    std::set<std::string> out;
    for (const auto& n : _nodes)
      if (n.kind == NodeKind::Activity) out.insert(n.label);
    return out;
  }

  std::set<std::string> activities(int id) const {
    std::set<std::string> out;
    collect(id, out);
    return out;
  }

  friend bool operator==(const ProcessTree&, const ProcessTree&) = default;

 private:
  ProcessTree rebuild(int at, int target, const ProcessTree& replacement) const {
    if (at == target) return replacement;
    const auto& n = node(at);
    if (!is_operator(n.kind)) return subtree(at);
    std::vector<ProcessTree> children;
    for (int c : n.children) children.push_back(rebuild(c, target, replacement));
    return op(n.kind, std::move(children));
  }

  void collect(int id, std::set<std::string>& out) const {
    const auto& n = node(id);
    if (n.kind == NodeKind::Activity) out.insert(n.label);
    for (int c : n.children) collect(c, out);
  }

  std::vector<TreeNode> _nodes;
};

// Notation ------------------------------------------------------------------
//
//   tree := label | "tau" | op "(" tree ("," tree)* ")"
//   op   := "->" | "X" | "+" | "*"
//
// Labels are any characters except ',', '(' and ')', trimmed of surrounding
// whitespace. A token is an operator only when followed by '('.

namespace detail {

class TreeParser {
 public:
  explicit TreeParser(std::string_view text) : _text(text) {}

  ProcessTree parse() {
    skip_ws();
    if (_pos >= _text.size()) fail("empty tree text");
    auto tree = parse_tree();
    skip_ws();
    if (_pos != _text.size()) fail("unexpected trailing input");
    return tree;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error("SyntaxError", what + " at byte offset " + std::to_string(_pos));
  }

  void skip_ws() {
    while (_pos < _text.size() && std::isspace(static_cast<unsigned char>(_text[_pos]))) ++_pos;
  }

  ProcessTree parse_tree() {
    skip_ws();
    const std::size_t start = _pos;
    while (_pos < _text.size() && _text[_pos] != ',' && _text[_pos] != '(' && _text[_pos] != ')') ++_pos;
    std::string_view token = _text.substr(start, _pos - start);
    while (!token.empty() && std::isspace(static_cast<unsigned char>(token.back()))) token.remove_suffix(1);

    if (_pos < _text.size() && _text[_pos] == '(') {
      NodeKind kind;
      if (token == "->") kind = NodeKind::Sequence;
      else if (token == "X") kind = NodeKind::Xor;
      else if (token == "+") kind = NodeKind::Parallel;
      else if (token == "*") kind = NodeKind::Loop;
      else {
        _pos = start;
        fail("unknown operator '" + std::string(token) + "'");
      }
      const std::size_t op_pos = start;
      ++_pos;  // '('
      std::vector<ProcessTree> children;
      children.push_back(parse_tree());
      skip_ws();
      while (_pos < _text.size() && _text[_pos] == ',') {
        ++_pos;
        children.push_back(parse_tree());
        skip_ws();
      }
      if (_pos >= _text.size() || _text[_pos] != ')') fail("expected ')'");
      ++_pos;
      if (kind == NodeKind::Loop && children.size() < 2)
        throw Error("ArityError", "loop at byte offset " + std::to_string(op_pos) + " needs at least two children");
      return ProcessTree::op(kind, std::move(children));
    }
    if (token.empty()) {
      _pos = start;
      fail("expected label or operator");
    }
    if (token == "tau") return ProcessTree::silent();
    return ProcessTree::activity(std::string(token));
  }

  std::string_view _text;
  std::size_t _pos = 0;
};

inline void serialize_node(const ProcessTree& t, int id, std::string& out) {
  const auto& n = t.node(id);
  switch (n.kind) {
    case NodeKind::Silent: out += "tau"; return;
    case NodeKind::Activity: out += n.label; return;
    default: break;
  }
  out += operator_symbol(n.kind);
  out += "( ";
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    if (i) out += ", ";
    serialize_node(t, n.children[i], out);
  }
  out += " )";
}

}  // namespace detail

inline ProcessTree parse_tree(std::string_view text) { return detail::TreeParser(text).parse(); }

inline std::string serialize(const ProcessTree& tree, int id = 0) {
  std::string out;
  detail::serialize_node(tree, id, out);
  return out;
}

inline std::vector<TreeEdge> edges(const ProcessTree& tree) {
  std::vector<TreeEdge> out;
  for (int id = 0; id < tree.size(); ++id) {
    const auto& n = tree.node(id);
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      const auto& c = tree.node(n.children[i]);
      TreeEdge e{id, static_cast<int>(i), std::nullopt};
      if (c.kind == NodeKind::Activity) e.child_activity = c.label;
      out.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace ptsim
