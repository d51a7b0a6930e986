#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace prevent::bt {

enum class NodeStatus { Running, Success, Failure };

enum class NodeKind { Sequence, Fallback, Parallel, Action, Condition };

std::string_view to_string(NodeStatus s);
std::string_view to_string(NodeKind k);
std::optional<NodeStatus> node_status_from_string(std::string_view s);
std::optional<NodeKind> node_kind_from_string(std::string_view s);

constexpr bool is_composite(NodeKind k) {
  return k == NodeKind::Sequence || k == NodeKind::Fallback || k == NodeKind::Parallel;
}

enum class ErrorCode { UnboundLeaf, MalformedTree, DuplicateLeaf };

class BtError : public std::runtime_error {
 public:
  BtError(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

using Params = std::map<std::string, std::string, std::less<>>;

/// Parsed value of a parallel node's `success` attribute. An empty count means
/// every child must succeed.
struct SuccessThreshold {
  std::optional<std::size_t> count;
  friend bool operator==(const SuccessThreshold&, const SuccessThreshold&) = default;
};

/// Returns nullopt when `text` is neither "all" nor a positive integer.
std::optional<SuccessThreshold> parse_success_threshold(std::string_view text);

/// Returns nullopt unless `text` is "true" or "false".
std::optional<bool> parse_flag(std::string_view text);

/// One node of an executable behavior tree. Attributes live in `params`;
/// `memory()` and `success_threshold()` are views over them, so a tree read
/// from text and a tree built in code carry identical state.
class TreeNode {
 public:
  TreeNode(NodeKind kind, std::string leaf_name, Params params, std::vector<TreeNode> children);

  static TreeNode sequence(std::vector<TreeNode> children, bool memory = false);
  static TreeNode fallback(std::vector<TreeNode> children, bool memory = false);
  static TreeNode parallel(std::vector<TreeNode> children,
                           std::optional<std::size_t> success_count = std::nullopt);
  static TreeNode action(std::string name, Params params = {});
  static TreeNode condition(std::string name, Params params = {});

  NodeKind kind() const { return kind_; }
  const std::string& leaf_name() const { return leaf_name_; }
  const Params& params() const { return params_; }
  Params& params() { return params_; }
  const std::vector<TreeNode>& children() const { return children_; }
  std::vector<TreeNode>& children() { return children_; }

  /// Sequence/fallback resume from the running child instead of restarting.
  bool memory() const;
  /// Only meaningful for parallel nodes; nullopt if the attribute is invalid.
  std::optional<SuccessThreshold> success_threshold() const;

  /// Label used in node paths: the leaf name, or the composite kind.
  std::string label() const;

  /// Structural equality; per-node runtime memory is ignored.
  friend bool operator==(const TreeNode& a, const TreeNode& b);

 private:
  friend class Ticker;
  friend void reset(TreeNode& root);

  NodeKind kind_;
  std::string leaf_name_;
  Params params_;
  std::vector<TreeNode> children_;
  std::size_t cursor_ = 0;  // runtime memory for memory=true composites
};

/// Path of the root node, e.g. "/parallel".
std::string root_path(const TreeNode& root);
/// Path of child `index` under `parent_path`, e.g. "/parallel/1:fallback".
std::string child_path(std::string_view parent_path, std::size_t index, const TreeNode& child);

/// Throws BtError(MalformedTree) when a structural invariant is violated.
void check_structure(const TreeNode& root);

std::size_t count_nodes(const TreeNode& root);
std::size_t depth(const TreeNode& root);

}  // namespace prevent::bt
