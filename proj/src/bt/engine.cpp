#include "prevent/bt/engine.hpp"

#include <ostream>

namespace prevent::bt {

void LeafRegistry::register_leaf(std::string name, LeafFn fn,
                                 std::set<std::string, std::less<>> params) {
  if (leaves_.find(name) != leaves_.end()) {
    throw BtError(ErrorCode::DuplicateLeaf, "leaf '" + name + "' is already registered");
  }
  leaves_.emplace(std::move(name), LeafBinding{std::move(fn), std::move(params)});
}

const LeafBinding* LeafRegistry::find(std::string_view name) const {
  auto it = leaves_.find(name);
  return it == leaves_.end() ? nullptr : &it->second;
}

std::vector<std::string> LeafRegistry::names() const {
  std::vector<std::string> out;
  out.reserve(leaves_.size());
  for (const auto& [name, _] : leaves_) out.push_back(name);
  return out;
}

namespace {

void write_json_string(std::ostream& os, std::string_view s) {
  os << '"';
  for (char c : s) {
    switch (c) {
      case '"':
        os << "\\\"";
        break;
      case '\\':
        os << "\\\\";
        break;
      case '\n':
        os << "\\n";
        break;
      default:
        os << c;
    }
  }
  os << '"';
}

}  // namespace

void TraceLog::write_lines(std::ostream& os) const {
  for (const auto& t : ticks_) {
    for (const auto& v : t.visits) {
      os << "{\"tick\":" << t.tick << ",\"t\":" << t.timestamp << ",\"path\":";
      write_json_string(os, v.path);
      os << ",\"status\":\"" << to_string(v.status) << "\"}\n";
    }
  }
}

class Ticker {
 public:
  Ticker(Blackboard& bb, const LeafRegistry& registry, TickTrace* trace)
      : bb_(bb), registry_(registry), trace_(trace) {}

  NodeStatus visit(TreeNode& node, const std::string& path) {
    std::size_t slot = 0;
    if (trace_) {
      slot = trace_->visits.size();
      trace_->visits.push_back({path, NodeStatus::Running});
    }
    NodeStatus s = evaluate(node, path);
    if (trace_) trace_->visits[slot].status = s;
    return s;
  }

 private:
  NodeStatus evaluate(TreeNode& node, const std::string& path) {
    switch (node.kind()) {
      case NodeKind::Sequence:
        return run_chain(node, path, NodeStatus::Success);
      case NodeKind::Fallback:
        return run_chain(node, path, NodeStatus::Failure);
      case NodeKind::Parallel:
        return run_parallel(node, path);
      case NodeKind::Action:
      case NodeKind::Condition:
        return run_leaf(node, path);
    }
    return NodeStatus::Failure;
  }

  // Sequence continues on Success, fallback continues on Failure.
  NodeStatus run_chain(TreeNode& node, const std::string& path, NodeStatus continue_on) {
    auto& children = node.children_;
    const bool memory = node.memory();
    std::size_t start = memory ? node.cursor_ : 0;
    for (std::size_t i = start; i < children.size(); ++i) {
      NodeStatus s = visit(children[i], child_path(path, i, children[i]));
      if (s == continue_on) continue;
      if (s == NodeStatus::Running) {
        if (memory) node.cursor_ = i;
        // Children after the running one are not active this tick.
        for (std::size_t j = i + 1; j < children.size(); ++j) reset(children[j]);
        return s;
      }
      node.cursor_ = 0;
      for (auto& c : children) reset(c);
      return s;
    }
    node.cursor_ = 0;
    for (auto& c : children) reset(c);
    return continue_on;
  }

  NodeStatus run_parallel(TreeNode& node, const std::string& path) {
    auto& children = node.children_;
    std::size_t successes = 0;
    bool failed = false;
    for (std::size_t i = 0; i < children.size(); ++i) {
      NodeStatus s = visit(children[i], child_path(path, i, children[i]));
      if (s == NodeStatus::Success) ++successes;
      if (s == NodeStatus::Failure) failed = true;
    }
    const auto threshold = node.success_threshold().value_or(SuccessThreshold{});
    const std::size_t needed = threshold.count.value_or(children.size());
    if (failed || successes >= needed) {
      for (auto& c : children) reset(c);
      return failed ? NodeStatus::Failure : NodeStatus::Success;
    }
    return NodeStatus::Running;
  }

  NodeStatus run_leaf(TreeNode& node, const std::string& path) {
    const LeafBinding* binding = registry_.find(node.leaf_name());
    if (!binding) {
      throw BtError(ErrorCode::UnboundLeaf, "leaf '" + node.leaf_name() + "' is not registered");
    }
    LeafContext ctx{bb_, node, path};
    NodeStatus s = binding->fn(ctx);
    if (node.kind() == NodeKind::Condition && s == NodeStatus::Running) {
      throw BtError(ErrorCode::MalformedTree,
                    path + ": condition '" + node.leaf_name() + "' returned RUNNING");
    }
    return s;
  }

  Blackboard& bb_;
  const LeafRegistry& registry_;
  TickTrace* trace_;
};

NodeStatus tick(TreeNode& root, Blackboard& bb, const LeafRegistry& registry, TraceLog* trace) {
  check_structure(root);
  check_bindings(root, registry);
  bb.advance_tick();
  TickTrace record{bb.tick_count(), bb.now(), {}};
  Ticker ticker(bb, registry, trace ? &record : nullptr);
  NodeStatus s = ticker.visit(root, root_path(root));
  if (trace) trace->append(std::move(record));
  return s;
}

void reset(TreeNode& root) {
  root.cursor_ = 0;
  for (auto& c : root.children_) reset(c);
}

void check_bindings(const TreeNode& root, const LeafRegistry& registry) {
  if (!is_composite(root.kind())) {
    if (!registry.contains(root.leaf_name())) {
      throw BtError(ErrorCode::UnboundLeaf, "leaf '" + root.leaf_name() + "' is not registered");
    }
    return;
  }
  for (const auto& c : root.children()) check_bindings(c, registry);
}

}  // namespace prevent::bt
