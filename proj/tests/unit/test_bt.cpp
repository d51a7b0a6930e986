#include <gtest/gtest.h>

#include <map>
#include <random>
#include <sstream>

#include "prevent/bt/engine.hpp"
#include "support/bt_oracle.hpp"

using namespace prevent::bt;
using namespace prevent::testing;


TEST(BtTick, FallbackAllFail) {
  auto tree = TreeNode::fallback({TreeNode::action("A"), TreeNode::action("B")});
  auto reg = constant_registry({{"A", NodeStatus::Failure}, {"B", NodeStatus::Failure}});
  Blackboard bb;
  EXPECT_EQ(tick(tree, bb, reg), NodeStatus::Failure);
}

TEST(BtTick, SequenceSuccessThenRunning) {
  auto tree = TreeNode::sequence({TreeNode::action("A"), TreeNode::action("B")});
  auto reg = constant_registry({{"A", NodeStatus::Success}, {"B", NodeStatus::Running}});
  Blackboard bb;
  EXPECT_EQ(tick(tree, bb, reg), NodeStatus::Running);
}

TEST(BtTick, ParallelAllThreshold) {
  auto tree =
      TreeNode::parallel({TreeNode::action("A"), TreeNode::action("B"), TreeNode::action("C")});
  Blackboard bb;
  auto r1 = constant_registry(
      {{"A", NodeStatus::Success}, {"B", NodeStatus::Running}, {"C", NodeStatus::Success}});
  EXPECT_EQ(tick(tree, bb, r1), NodeStatus::Running);
  auto r2 = constant_registry(
      {{"A", NodeStatus::Success}, {"B", NodeStatus::Success}, {"C", NodeStatus::Success}});
  EXPECT_EQ(tick(tree, bb, r2), NodeStatus::Success);
}

TEST(BtTick, ParallelAnyFailureFails) {
  auto tree = TreeNode::parallel({TreeNode::action("A"), TreeNode::action("B")}, 1);
  auto reg = constant_registry({{"A", NodeStatus::Success}, {"B", NodeStatus::Failure}});
  Blackboard bb;
  EXPECT_EQ(tick(tree, bb, reg), NodeStatus::Failure);
}

TEST(BtTick, ParallelPartialThreshold) {
  auto tree = TreeNode::parallel({TreeNode::action("A"), TreeNode::action("B")}, 1);
  auto reg = constant_registry({{"A", NodeStatus::Success}, {"B", NodeStatus::Running}});
  Blackboard bb;
  EXPECT_EQ(tick(tree, bb, reg), NodeStatus::Success);
}

TEST(BtTick, ConditionRunningIsMalformed) {
  auto tree = TreeNode::sequence({TreeNode::condition("C")});
  auto reg = constant_registry({{"C", NodeStatus::Running}});
  Blackboard bb;
  try {
    tick(tree, bb, reg);
    FAIL();
  } catch (const BtError& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedTree);
  }
}

TEST(BtTick, UnboundLeaf) {
  auto tree = TreeNode::sequence({TreeNode::action("StopRobot"), TreeNode::action("Nope")});
  auto reg = constant_registry({{"StopRobot", NodeStatus::Success}});
  Blackboard bb;
  try {
    tick(tree, bb, reg);
    FAIL();
  } catch (const BtError& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnboundLeaf);
  }
  EXPECT_EQ(bb.tick_count(), 0u);
}

TEST(BtTick, EmptyCompositeIsMalformed) {
  TreeNode tree(NodeKind::Sequence, "", {}, {});
  LeafRegistry reg;
  Blackboard bb;
  try {
    tick(tree, bb, reg);
    FAIL();
  } catch (const BtError& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedTree);
  }
}

TEST(BtRegistry, RegisterAndDuplicate) {
  LeafRegistry reg;
  int calls = 0;
  reg.register_leaf("StopRobot", [&](LeafContext&) {
    ++calls;
    return NodeStatus::Success;
  });
  auto tree = TreeNode::action("StopRobot");
  Blackboard bb;
  EXPECT_EQ(tick(tree, bb, reg), NodeStatus::Success);
  EXPECT_EQ(calls, 1);
  try {
    reg.register_leaf("StopRobot", [](LeafContext&) { return NodeStatus::Success; });
    FAIL();
  } catch (const BtError& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateLeaf);
  }
}

TEST(BtBlackboard, WritesVisibleToLaterSiblingsSameTick) {
  LeafRegistry reg;
  reg.register_leaf("Write", [](LeafContext& c) {
    c.bb.set("x", c.bb.tick_count());
    return NodeStatus::Success;
  });
  reg.register_leaf("Read", [](LeafContext& c) {
    auto* v = c.bb.find<std::uint64_t>("x");
    return v && *v == c.bb.tick_count() ? NodeStatus::Success : NodeStatus::Failure;
  });
  auto tree = TreeNode::parallel({TreeNode::action("Write"), TreeNode::condition("Read")});
  Blackboard bb;
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(tick(tree, bb, reg), NodeStatus::Success);
    EXPECT_EQ(bb.tick_count(), static_cast<std::uint64_t>(i + 1));
  }
}

TEST(BtTrace, PathsAndShortCircuit) {
  Script script;
  script.statuses = {{"A", {NodeStatus::Failure}}, {"B", {NodeStatus::Success}},
                     {"C", {NodeStatus::Success}}};
  auto reg = scripted_registry(script, {"A", "B", "C"});
  auto tree = TreeNode::fallback(
      {TreeNode::condition("A"),
       TreeNode::sequence({TreeNode::action("B"), TreeNode::action("C")}),
       TreeNode::action("Z")});
  reg.register_leaf("Z", [](LeafContext&) { return NodeStatus::Success; });
  Blackboard bb;
  bb.set_now(1.5);
  TraceLog log;
  EXPECT_EQ(tick(tree, bb, reg, &log), NodeStatus::Success);
  ASSERT_EQ(log.ticks().size(), 1u);
  std::vector<NodeVisit> want{{"/fallback", NodeStatus::Success},
                              {"/fallback/0:A", NodeStatus::Failure},
                              {"/fallback/1:sequence", NodeStatus::Success},
                              {"/fallback/1:sequence/0:B", NodeStatus::Success},
                              {"/fallback/1:sequence/1:C", NodeStatus::Success}};
  EXPECT_EQ(log.ticks()[0].visits, want);
  std::ostringstream os;
  log.write_lines(os);
  EXPECT_NE(os.str().find(R"({"tick":1,"t":1.5,"path":"/fallback","status":"SUCCESS"})"),
            std::string::npos);
}

TEST(BtReset, MemorySequenceRestartsFromFirstChild) {
  Script script;
  script.statuses = {{"A", {NodeStatus::Success}}, {"B", {NodeStatus::Running}}};
  auto reg = scripted_registry(script, {"A", "B"});
  auto tree = TreeNode::sequence({TreeNode::action("A"), TreeNode::action("B")}, true);
  Blackboard bb;
  tick(tree, bb, reg);
  script.calls.clear();
  tick(tree, bb, reg);
  EXPECT_EQ(script.calls, (std::vector<std::string>{"B"}));
  reset(tree);
  script.calls.clear();
  tick(tree, bb, reg);
  EXPECT_EQ(script.calls, (std::vector<std::string>{"A", "B"}));
}

TEST(BtReset, FreshTreeUnchangedAndLeafResetHarmless) {
  auto tree = TreeNode::sequence({TreeNode::action("A")}, true);
  auto copy = tree;
  reset(tree);
  EXPECT_EQ(tree, copy);
  auto leaf = TreeNode::action("A");
  reset(leaf);
  EXPECT_EQ(leaf, TreeNode::action("A"));
}

TEST(BtOracle, RandomTreesMatchBruteForce) {
  TreeGen gen{std::mt19937_64(20240611)};
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> pick(0, 2);
  const NodeStatus all[] = {NodeStatus::Running, NodeStatus::Success, NodeStatus::Failure};
  const NodeStatus cond[] = {NodeStatus::Success, NodeStatus::Failure};
  int checked = 0;
  for (int t = 0; t < 1200; ++t) {
    gen.leaves = 0;
    TreeNode tree = gen.make(0, 1 + t % 4);
    std::vector<const TreeNode*> leaves;
    collect_leaves(tree, leaves);
    Script script;
    std::vector<std::string> names;
    for (const auto* l : leaves) {
      std::vector<NodeStatus> seq;
      for (int k = 0; k < 5; ++k) {
        seq.push_back(l->kind() == NodeKind::Condition ? cond[pick(rng) % 2] : all[pick(rng)]);
      }
      script.statuses[l->leaf_name()] = seq;
      names.push_back(l->leaf_name());
    }
    auto reg = scripted_registry(script, names);
    Blackboard bb;
    Oracle oracle(script);
    TraceLog log;
    for (std::size_t k = 0; k < 5; ++k) {
      script.tick = k;
      oracle.visited.clear();
      auto want = oracle.eval(tree, root_path(tree));
      auto got = tick(tree, bb, reg, &log);
      ASSERT_EQ(got, want) << "tree " << t << " tick " << k;
      const auto& visits = log.ticks().back().visits;
      ASSERT_EQ(visits.size(), oracle.visited.size());
      for (std::size_t v = 0; v < visits.size(); ++v) {
        ASSERT_EQ(visits[v].path, oracle.visited[v]);
      }
    }
    ++checked;
  }
  EXPECT_GE(checked, 1000);
}

TEST(BtTrace, DeterministicAcrossRuns) {
  auto run = [] {
    TreeGen gen{std::mt19937_64(99)};
    TreeNode tree = gen.make(0, 4);
    std::vector<const TreeNode*> leaves;
    collect_leaves(tree, leaves);
    Script script;
    std::vector<std::string> names;
    int i = 0;
    for (const auto* l : leaves) {
      script.statuses[l->leaf_name()] = {
          l->kind() == NodeKind::Condition ? NodeStatus::Failure : NodeStatus::Running,
          (i++ % 2) ? NodeStatus::Success : NodeStatus::Failure};
      names.push_back(l->leaf_name());
    }
    auto reg = scripted_registry(script, names);
    Blackboard bb;
    TraceLog log;
    for (std::size_t k = 0; k < 6; ++k) {
      script.tick = k;
      tick(tree, bb, reg, &log);
    }
    return log;
  };
  EXPECT_EQ(run(), run());
}

TEST(BtNode, ThresholdParsing) {
  EXPECT_EQ(parse_success_threshold("all"), SuccessThreshold{});
  EXPECT_EQ(parse_success_threshold("2"), SuccessThreshold{2});
  EXPECT_FALSE(parse_success_threshold("0"));
  EXPECT_FALSE(parse_success_threshold("-1"));
  EXPECT_FALSE(parse_success_threshold("x"));
}
