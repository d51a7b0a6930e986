#pragma once

// Brute-force reference for the tick semantics, plus a random tree generator.

#include <map>
#include <random>
#include <string>
#include <vector>

#include "prevent/bt/engine.hpp"

namespace prevent::testing {

using namespace prevent::bt;

// Leaves named L<k> return the k-th entry of a per-tick script.
struct Script {
  std::map<std::string, std::vector<NodeStatus>> statuses;
  std::vector<std::string> calls;
  std::size_t tick = 0;

  NodeStatus at(const std::string& name) const {
    const auto& s = statuses.at(name);
    return s[tick % s.size()];
  }
};

inline LeafRegistry scripted_registry(Script& script, const std::vector<std::string>& names) {
  LeafRegistry reg;
  for (const auto& n : names) {
    reg.register_leaf(n, [&script, n](LeafContext&) {
      script.calls.push_back(n);
      return script.at(n);
    });
  }
  return reg;
}

inline LeafRegistry constant_registry(std::map<std::string, NodeStatus> values) {
  LeafRegistry reg;
  for (auto [n, s] : values) {
    reg.register_leaf(n, [s = s](LeafContext&) { return s; });
  }
  return reg;
}

// Recursive evaluator written straight from the node definitions. Composite
// memory lives in a path-keyed map rather than in the nodes.
class Oracle {
 public:
  explicit Oracle(const Script& s) : script_(s) {}

  NodeStatus eval(const TreeNode& n, const std::string& path) {
    visited.push_back(path);
    switch (n.kind()) {
      case NodeKind::Action:
      case NodeKind::Condition:
        return script_.at(n.leaf_name());
      case NodeKind::Parallel: {
        std::size_t ok = 0;
        bool fail = false;
        for (std::size_t i = 0; i < n.children().size(); ++i) {
          auto s = eval(n.children()[i], child_path(path, i, n.children()[i]));
          ok += s == NodeStatus::Success;
          fail |= s == NodeStatus::Failure;
        }
        auto need = n.success_threshold()->count.value_or(n.children().size());
        if (fail) {
          forget_below(path);
          return NodeStatus::Failure;
        }
        if (ok >= need) {
          forget_below(path);
          return NodeStatus::Success;
        }
        return NodeStatus::Running;
      }
      case NodeKind::Sequence:
      case NodeKind::Fallback: {
        const bool seq = n.kind() == NodeKind::Sequence;
        const NodeStatus pass = seq ? NodeStatus::Success : NodeStatus::Failure;
        std::size_t i = n.memory() ? cursor_[path] : 0;
        for (; i < n.children().size(); ++i) {
          auto cp = child_path(path, i, n.children()[i]);
          auto s = eval(n.children()[i], cp);
          if (s == pass) continue;
          if (s == NodeStatus::Running) {
            for (std::size_t j = i + 1; j < n.children().size(); ++j) {
              forget_at(child_path(path, j, n.children()[j]));
            }
            if (n.memory()) cursor_[path] = i;
            return s;
          }
          forget_below(path);
          cursor_.erase(path);
          return s;
        }
        forget_below(path);
        cursor_.erase(path);
        return pass;
      }
    }
    return NodeStatus::Failure;
  }

  std::vector<std::string> visited;

 private:
  void forget_at(const std::string& p) {
    for (auto it = cursor_.begin(); it != cursor_.end();) {
      if (it->first == p || it->first.rfind(p + "/", 0) == 0) {
        it = cursor_.erase(it);
      } else {
        ++it;
      }
    }
  }
  void forget_below(const std::string& p) {
    for (auto it = cursor_.begin(); it != cursor_.end();) {
      if (it->first.rfind(p + "/", 0) == 0) {
        it = cursor_.erase(it);
      } else {
        ++it;
      }
    }
  }

  const Script& script_;
  std::map<std::string, std::size_t> cursor_;
};

struct TreeGen {
  std::mt19937_64 rng;
  int leaves = 0;

  TreeNode make(int depth, int max_depth) {
    std::uniform_int_distribution<int> kind(0, 4);
    int k = depth + 1 >= max_depth ? 3 : kind(rng);
    if (depth == 0 && k >= 3) k = kind(rng) % 3;
    if (k >= 3) {
      std::string name = "L" + std::to_string(leaves++);
      return (k == 3) ? TreeNode::action(name) : TreeNode::condition(name);
    }
    std::uniform_int_distribution<int> fan(1, 4);
    std::vector<TreeNode> kids;
    int n = fan(rng);
    for (int i = 0; i < n; ++i) kids.push_back(make(depth + 1, max_depth));
    std::bernoulli_distribution coin(0.3);
    if (k == 0) return TreeNode::sequence(std::move(kids), coin(rng));
    if (k == 1) return TreeNode::fallback(std::move(kids), coin(rng));
    std::optional<std::size_t> thr;
    if (coin(rng)) thr = std::uniform_int_distribution<std::size_t>(1, kids.size())(rng);
    return TreeNode::parallel(std::move(kids), thr);
  }
};

inline void collect_leaves(const TreeNode& n, std::vector<const TreeNode*>& out) {
  if (!is_composite(n.kind())) out.push_back(&n);
  for (const auto& c : n.children()) collect_leaves(c, out);
}

}  // namespace prevent::testing
