#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "prevent/bt/blackboard.hpp"
#include "prevent/bt/node.hpp"

namespace prevent::bt {

struct LeafContext {
  Blackboard& bb;
  const TreeNode& node;
  std::string_view path;
};

using LeafFn = std::function<NodeStatus(LeafContext&)>;

struct LeafBinding {
  LeafFn fn;
  std::set<std::string, std::less<>> params;  // attribute keys the leaf accepts
};

class LeafRegistry {
 public:
  /// Throws BtError(DuplicateLeaf) if `name` is already bound.
  void register_leaf(std::string name, LeafFn fn, std::set<std::string, std::less<>> params = {});

  const LeafBinding* find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }
  std::vector<std::string> names() const;

 private:
  std::map<std::string, LeafBinding, std::less<>> leaves_;
};

inline void register_leaf(LeafRegistry& registry, std::string name, LeafFn fn) {
  registry.register_leaf(std::move(name), std::move(fn));
}

struct NodeVisit {
  std::string path;
  NodeStatus status = NodeStatus::Running;
  friend bool operator==(const NodeVisit&, const NodeVisit&) = default;
};

/// Node visits of one tick, in depth-first visitation order.
struct TickTrace {
  std::uint64_t tick = 0;
  double timestamp = 0.0;
  std::vector<NodeVisit> visits;
  friend bool operator==(const TickTrace&, const TickTrace&) = default;
};

class TraceLog {
 public:
  void append(TickTrace t) { ticks_.push_back(std::move(t)); }
  const std::vector<TickTrace>& ticks() const { return ticks_; }
  bool empty() const { return ticks_.empty(); }
  void clear() { ticks_.clear(); }

  /// One JSON object per line: {"tick":..,"t":..,"path":..,"status":..}.
  void write_lines(std::ostream& os) const;

  friend bool operator==(const TraceLog&, const TraceLog&) = default;

 private:
  std::vector<TickTrace> ticks_;
};

/// Evaluates the tree once. Condition leaves returning Running are reported as
/// MalformedTree, since conditions must be instantaneous.
NodeStatus tick(TreeNode& root, Blackboard& bb, const LeafRegistry& registry,
                TraceLog* trace = nullptr);

/// Clears every composite's memory so the next tick behaves as the first.
void reset(TreeNode& root);

/// Throws UnboundLeaf for the first leaf missing from `registry`.
void check_bindings(const TreeNode& root, const LeafRegistry& registry);

}  // namespace prevent::bt
