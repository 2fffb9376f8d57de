#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ptsim/error.hpp"
#include "ptsim/eventlog.hpp"

namespace ptsim {

enum class NodeKind { Activity, Tau, Sequence, Xor, Parallel, Loop };

std::string_view to_string(NodeKind kind);
std::optional<NodeKind> node_kind_from_string(std::string_view s);
inline bool is_operator(NodeKind k) { return k != NodeKind::Activity && k != NodeKind::Tau; }

/// A process-tree node held by value. Which fields are meaningful depends on
/// `kind`: `label` for activities; `children` for operators; `weights` for
/// Xor (empty = uniform); `max_redo` and `redo_probability` for Loop, where
/// children[0] is the do-body and the rest are redo alternatives.
struct Node {
  NodeKind kind = NodeKind::Tau;
  std::string label;
  std::vector<Node> children;
  std::vector<double> weights;
  std::optional<int> max_redo;
  std::optional<double> redo_probability;

  static Node activity(std::string name);
  static Node tau();
  static Node op(NodeKind kind, std::vector<Node> children);

  bool is_leaf() const { return !is_operator(kind); }
  friend bool operator==(const Node&, const Node&) = default;
};

struct ProcessTree {
  Node root;
  std::optional<std::size_t> max_trace_length;  // absent = unbounded

  friend bool operator==(const ProcessTree&, const ProcessTree&) = default;
};

/// Path of child indices from the root; empty addresses the root.
using NodeId = std::vector<std::size_t>;

std::string to_string(const NodeId& id);
const Node* find_node(const Node& root, const NodeId& id);

struct Violation {
  ErrorCode code;
  NodeId node;
  std::string message;
};

std::vector<Violation> validate(const ProcessTree& tree);

/// Throws the first violation as an Error.
void require_valid(const ProcessTree& tree);

// Textual form:
//   node  := leaf | op annot?
//   leaf  := NAME | "quoted name" | tau
//   op    := ("->" | "X" | "+" | "*") "(" node_w ("," node_w)* ")"
//   node_w:= node (":" FLOAT)?          weights only directly under X
//   annot := "{" key "=" value ("," key "=" value)* "}"
// Loop keys are max_redo and p_redo; the root may also carry
// max_trace_length (leaf roots included).
ProcessTree parse_tree(std::string_view text);
std::string render_tree(const ProcessTree& tree);
std::string render_node(const Node& node);

namespace edit {
struct ChangeOperator {
  NodeId node;
  NodeKind kind;
  friend bool operator==(const ChangeOperator&, const ChangeOperator&) = default;
};
struct InsertChild {
  NodeId node;
  std::size_t position;
  Node subtree;
  friend bool operator==(const InsertChild&, const InsertChild&) = default;
};
struct DeleteChild {
  NodeId node;
  std::size_t position;
  friend bool operator==(const DeleteChild&, const DeleteChild&) = default;
};
struct SetXorWeights {
  NodeId node;
  std::vector<double> weights;
  friend bool operator==(const SetXorWeights&, const SetXorWeights&) = default;
};
struct SetMaxRedo {
  NodeId node;
  std::optional<int> max_redo;
  friend bool operator==(const SetMaxRedo&, const SetMaxRedo&) = default;
};
struct ReplaceSubtree {
  NodeId node;
  Node subtree;
  friend bool operator==(const ReplaceSubtree&, const ReplaceSubtree&) = default;
};
struct SwapChildren {
  NodeId node;
  std::size_t first;
  std::size_t second;
  friend bool operator==(const SwapChildren&, const SwapChildren&) = default;
};
}  // namespace edit

using TreeEdit = std::variant<edit::ChangeOperator, edit::InsertChild, edit::DeleteChild, edit::SetXorWeights,
                              edit::SetMaxRedo, edit::ReplaceSubtree, edit::SwapChildren>;

/// Pure: returns the edited tree or throws (BadNodeId, InvariantViolation)
/// without touching `tree`. A Sequence or Parallel left with a single child
/// after DeleteChild is replaced by that child.
ProcessTree apply_edit(const ProcessTree& tree, const TreeEdit& e);

inline constexpr std::size_t kMaxEnumerationLength = 12;
inline constexpr std::size_t kMaxEnumerationSize = 1'000'000;

/// Every visible-activity sequence of length <= max_len the tree can produce,
/// honoring max_redo. Throws InvalidArgument for max_len > 12 and Explosion
/// when an intermediate language exceeds 10^6 sequences.
std::set<ActivitySequence> enumerate_language(const ProcessTree& tree, std::size_t max_len);

/// Shortest and longest visible lengths; longest is absent when a loop
/// without max_redo can repeat visible work.
std::size_t min_length(const Node& node);
std::optional<std::size_t> max_length(const Node& node);

std::set<std::string> leaf_activities(const Node& node);
std::size_t node_count(const Node& node);

}  // namespace ptsim
