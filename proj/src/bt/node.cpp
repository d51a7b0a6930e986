#include "prevent/bt/node.hpp"

#include <algorithm>
#include <charconv>

namespace prevent::bt {

std::string_view to_string(NodeStatus s) {
  switch (s) {
    case NodeStatus::Running:
      return "RUNNING";
    case NodeStatus::Success:
      return "SUCCESS";
    case NodeStatus::Failure:
      return "FAILURE";
  }
  return "FAILURE";
}

std::string_view to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Sequence:
      return "sequence";
    case NodeKind::Fallback:
      return "fallback";
    case NodeKind::Parallel:
      return "parallel";
    case NodeKind::Action:
      return "action";
    case NodeKind::Condition:
      return "condition";
  }
  return "action";
}

std::optional<NodeStatus> node_status_from_string(std::string_view s) {
  if (s == "RUNNING") return NodeStatus::Running;
  if (s == "SUCCESS") return NodeStatus::Success;
  if (s == "FAILURE") return NodeStatus::Failure;
  return std::nullopt;
}

std::optional<NodeKind> node_kind_from_string(std::string_view s) {
  if (s == "sequence") return NodeKind::Sequence;
  if (s == "fallback") return NodeKind::Fallback;
  if (s == "parallel") return NodeKind::Parallel;
  if (s == "action") return NodeKind::Action;
  if (s == "condition") return NodeKind::Condition;
  return std::nullopt;
}

std::optional<SuccessThreshold> parse_success_threshold(std::string_view text) {
  if (text == "all") return SuccessThreshold{};
  if (text.empty() || text.size() > 9) return std::nullopt;
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || value == 0) return std::nullopt;
  return SuccessThreshold{value};
}

std::optional<bool> parse_flag(std::string_view text) {
  if (text == "true") return true;
  if (text == "false") return false;
  return std::nullopt;
}

TreeNode::TreeNode(NodeKind kind, std::string leaf_name, Params params,
                   std::vector<TreeNode> children)
    : kind_(kind),
      leaf_name_(std::move(leaf_name)),
      params_(std::move(params)),
      children_(std::move(children)) {}

TreeNode TreeNode::sequence(std::vector<TreeNode> children, bool memory) {
  Params p;
  if (memory) p["memory"] = "true";
  return TreeNode(NodeKind::Sequence, {}, std::move(p), std::move(children));
}

TreeNode TreeNode::fallback(std::vector<TreeNode> children, bool memory) {
  Params p;
  if (memory) p["memory"] = "true";
  return TreeNode(NodeKind::Fallback, {}, std::move(p), std::move(children));
}

TreeNode TreeNode::parallel(std::vector<TreeNode> children,
                            std::optional<std::size_t> success_count) {
  Params p;
  p["success"] = success_count ? std::to_string(*success_count) : std::string("all");
  return TreeNode(NodeKind::Parallel, {}, std::move(p), std::move(children));
}

TreeNode TreeNode::action(std::string name, Params params) {
  return TreeNode(NodeKind::Action, std::move(name), std::move(params), {});
}

TreeNode TreeNode::condition(std::string name, Params params) {
  return TreeNode(NodeKind::Condition, std::move(name), std::move(params), {});
}

bool TreeNode::memory() const {
  auto it = params_.find("memory");
  if (it == params_.end()) return false;
  return parse_flag(it->second).value_or(false);
}

std::optional<SuccessThreshold> TreeNode::success_threshold() const {
  auto it = params_.find("success");
  if (it == params_.end()) return SuccessThreshold{};
  return parse_success_threshold(it->second);
}

std::string TreeNode::label() const {
  if (is_composite(kind_)) return std::string(to_string(kind_));
  return leaf_name_;
}

bool operator==(const TreeNode& a, const TreeNode& b) {
  return a.kind_ == b.kind_ && a.leaf_name_ == b.leaf_name_ && a.params_ == b.params_ &&
         a.children_ == b.children_;
}

std::string root_path(const TreeNode& root) { return "/" + root.label(); }

std::string child_path(std::string_view parent_path, std::size_t index, const TreeNode& child) {
  std::string out(parent_path);
  out += '/';
  out += std::to_string(index);
  out += ':';
  out += child.label();
  return out;
}

namespace {

void check_node(const TreeNode& n, const std::string& path) {
  if (is_composite(n.kind())) {
    if (n.children().empty()) {
      throw BtError(ErrorCode::MalformedTree, path + ": composite node has no children");
    }
    if (n.kind() == NodeKind::Parallel) {
      auto threshold = n.success_threshold();
      if (!threshold) {
        throw BtError(ErrorCode::MalformedTree,
                      path + ": parallel threshold must be positive or all");
      }
      if (threshold->count && *threshold->count > n.children().size()) {
        throw BtError(ErrorCode::MalformedTree,
                      path + ": parallel threshold exceeds child count");
      }
    }
    for (std::size_t i = 0; i < n.children().size(); ++i) {
      check_node(n.children()[i], child_path(path, i, n.children()[i]));
    }
  } else {
    if (!n.children().empty()) {
      throw BtError(ErrorCode::MalformedTree, path + ": leaf node has children");
    }
    if (n.leaf_name().empty()) {
      throw BtError(ErrorCode::MalformedTree, path + ": leaf node has no name");
    }
  }
}

}  // namespace

void check_structure(const TreeNode& root) { check_node(root, root_path(root)); }

std::size_t count_nodes(const TreeNode& root) {
  std::size_t n = 1;
  for (const auto& c : root.children()) n += count_nodes(c);
  return n;
}

std::size_t depth(const TreeNode& root) {
  std::size_t d = 0;
  for (const auto& c : root.children()) d = std::max(d, depth(c));
  return d + 1;
}

}  // namespace prevent::bt
