#include <gtest/gtest.h>

#include <random>

#include "prevent/dsl/dsl.hpp"
#include "support/dsl_gen.hpp"

using namespace prevent;
using bt::NodeKind;
using bt::TreeNode;
using prevent::testing::RandomTree;

namespace {

dsl::TreeDocument parse_body(const std::string& body) { return dsl::parse("btdsl 1\n" + body); }

dsl::ErrorCode error_of(const std::string& text) {
  try {
    dsl::parse(text);
  } catch (const dsl::ParseError& e) {
    return e.code();
  }
  ADD_FAILURE() << "parsed: " << text;
  return dsl::ErrorCode::SyntaxError;
}

bt::LeafRegistry registry_of(std::initializer_list<std::string> names) {
  bt::LeafRegistry reg;
  for (const auto& n : names) {
    reg.register_leaf(n, [](bt::LeafContext&) { return bt::NodeStatus::Success; }, {"target"});
  }
  return reg;
}

}  // namespace

TEST(DslParse, MinimalFallback) {
  auto doc = parse_body("fallback { condition C action A }");
  EXPECT_EQ(doc.root.kind(), NodeKind::Fallback);
  ASSERT_EQ(doc.root.children().size(), 2u);
  EXPECT_EQ(doc.root.children()[0].kind(), NodeKind::Condition);
  EXPECT_EQ(doc.root.children()[1].leaf_name(), "A");
  EXPECT_EQ(doc.version, 1);
}

TEST(DslParse, ParallelThreshold) {
  auto doc = parse_body("parallel(success=all) { action A action B }");
  EXPECT_EQ(doc.root.kind(), NodeKind::Parallel);
  EXPECT_EQ(doc.root.success_threshold(), bt::SuccessThreshold{});
  EXPECT_EQ(doc.root.children().size(), 2u);
}

TEST(DslParse, EmptyCompositeIsSyntaxError) {
  try {
    parse_body("sequence { }");
    FAIL();
  } catch (const dsl::ParseError& e) {
    EXPECT_EQ(e.code(), dsl::ErrorCode::SyntaxError);
    EXPECT_EQ(e.where(), (dsl::Position{2, 12}));
    EXPECT_FALSE(e.expected().empty());
  }
}

TEST(DslParse, ErrorKinds) {
  EXPECT_EQ(error_of(""), dsl::ErrorCode::EmptyDocument);
  EXPECT_EQ(error_of("# only a comment\n\n"), dsl::ErrorCode::EmptyDocument);
  EXPECT_EQ(error_of("btdsl 1\n# nothing\n"), dsl::ErrorCode::EmptyDocument);
  EXPECT_EQ(error_of("btdsl 1\naction A\naction B\n"), dsl::ErrorCode::DuplicateRootError);
  EXPECT_EQ(error_of("action A\n"), dsl::ErrorCode::SyntaxError);
  EXPECT_EQ(error_of("btdsl 2\naction A\n"), dsl::ErrorCode::SyntaxError);
  EXPECT_EQ(error_of("btdsl 1 action A\n"), dsl::ErrorCode::SyntaxError);
  EXPECT_EQ(error_of("btdsl 1\naction A(x=1, x=2)\n"), dsl::ErrorCode::SyntaxError);
  EXPECT_EQ(error_of("btdsl 1\naction A(x=)\n"), dsl::ErrorCode::SyntaxError);
  EXPECT_EQ(error_of("btdsl 1\nsequence { action A\n"), dsl::ErrorCode::SyntaxError);
  EXPECT_EQ(error_of("btdsl 1\nloop { action A }\n"), dsl::ErrorCode::SyntaxError);
}

TEST(DslParse, CommentsAndSpans) {
  auto doc = dsl::parse(
      "# header comment\n"
      "btdsl 1\n"
      "sequence(memory=true) {  # trailing\n"
      "  action A(k=-1.5)\n"
      "}\n");
  EXPECT_TRUE(doc.root.memory());
  EXPECT_EQ(doc.root.children()[0].params().at("k"), "-1.5");
  ASSERT_EQ(doc.spans.size(), 2u);
  EXPECT_EQ(doc.spans.at("/sequence"), (dsl::Span{{3, 1}, {5, 2}}));
  EXPECT_EQ(doc.spans.at("/sequence/0:A"), (dsl::Span{{4, 3}, {4, 19}}));
}

TEST(DslParse, ErrorPositionInsideOffendingToken) {
  const std::string text = "btdsl 1\nsequence {\n  action A\n  action 9lives\n}\n";
  try {
    dsl::parse(text);
    FAIL();
  } catch (const dsl::ParseError& e) {
    EXPECT_EQ(e.where(), (dsl::Position{4, 10}));
  }
}

TEST(DslParse, DeepNestingIsRejectedNotCrashed) {
  std::string text = "btdsl 1\n";
  for (int i = 0; i < 5000; ++i) text += "sequence { ";
  text += "action A";
  for (int i = 0; i < 5000; ++i) text += " }";
  EXPECT_EQ(error_of(text), dsl::ErrorCode::SyntaxError);
}

TEST(DslValidate, Diagnostics) {
  auto reg = registry_of({"A", "B"});
  auto doc = parse_body("sequence {\n  action A\n  action Nope\n}\n");
  auto diags = dsl::validate(doc, reg);
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_NE(diags[0].message.find("Nope"), std::string::npos);
  EXPECT_EQ(diags[0].span.begin, (dsl::Position{4, 3}));

  auto zero = parse_body("parallel(success=0) { action A action B }");
  diags = dsl::validate(zero, reg);
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_EQ(diags[0].message, "threshold must be positive or all");

  auto many = parse_body("parallel(success=3) { action A action B }");
  EXPECT_EQ(dsl::validate(many, reg).size(), 1u);

  auto attrs = parse_body(
      "sequence(memory=maybe, color=red) { action A(target=x, speed=2) parallel(memory=true) { "
      "action B } }");
  diags = dsl::validate(attrs, reg);
  EXPECT_EQ(diags.size(), 4u);

  auto ok = parse_body("fallback(memory=false) { action A(target=dock) condition B }");
  EXPECT_TRUE(dsl::validate(ok, reg).empty());
}

TEST(DslSerialize, Canonical) {
  auto tree = TreeNode::sequence(
      {TreeNode::action("A"),
       TreeNode::fallback({TreeNode::sequence({TreeNode::condition("C", {{"z", "1"}, {"a", "b"}})})})},
      true);
  const std::string want =
      "btdsl 1\n"
      "sequence(memory=true) {\n"
      "  action A\n"
      "  fallback {\n"
      "    sequence {\n"
      "      condition C(a=b, z=1)\n"
      "    }\n"
      "  }\n"
      "}\n";
  EXPECT_EQ(dsl::serialize(tree), want);
}

TEST(DslSerialize, RoundTripRandomTrees) {
  RandomTree gen{std::mt19937_64(31337)};
  for (int i = 0; i < 1500; ++i) {
    TreeNode t = gen.make(0);
    auto text = dsl::serialize(t);
    auto doc = dsl::parse(text);
    ASSERT_EQ(doc.root, t) << text;
    ASSERT_EQ(doc.spans.size(), bt::count_nodes(t));
    ASSERT_EQ(dsl::serialize(doc.root), text);
  }
}

TEST(DslFuzz, ArbitraryBytesNeverCrash) {
  std::mt19937_64 rng(4242);
  static const std::vector<std::string> fragments = {
      "btdsl 1\n", "sequence", "fallback", "parallel", "action", "condition", "{", "}", "(",
      ")",         "=",        ",",        " ",        "\n",     "#c\n",      "A", "memory",
      "true",      "success",  "all",      "-1.5",     "3",      "-",         ".", "\xff"};
  std::size_t parsed = 0, rejected = 0;
  for (int i = 0; i < 100000; ++i) {
    std::string text;
    const int mode = i % 3;
    if (mode == 0) {
      int len = std::uniform_int_distribution<int>(0, 64)(rng);
      for (int k = 0; k < len; ++k) text += static_cast<char>(rng() & 0xff);
    } else {
      if (mode == 1) text = "btdsl 1\n";
      int len = std::uniform_int_distribution<int>(0, 24)(rng);
      for (int k = 0; k < len; ++k) {
        text += fragments[std::uniform_int_distribution<std::size_t>(0, fragments.size() - 1)(rng)];
        text += ' ';
      }
    }
    try {
      auto doc = dsl::parse(text);
      ++parsed;
      ASSERT_EQ(dsl::parse(dsl::serialize(doc.root)).root, doc.root);
    } catch (const dsl::ParseError& e) {
      ++rejected;
      ASSERT_GE(e.where().line, 1u);
      ASSERT_GE(e.where().col, 1u);
    }
  }
  EXPECT_EQ(parsed + rejected, 100000u);
}
