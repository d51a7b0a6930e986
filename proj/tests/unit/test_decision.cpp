#include <gtest/gtest.h>

#include <optional>
#include <vector>

#include "prevent/decision/decision.hpp"
#include "support/decision_oracle.hpp"

using namespace prevent;
using decision::DecisionError;
using decision::DecisionInputs;
using decision::ErrorCode;
using decision::Phase;
using prevent::testing::nav_oracle;

namespace {

const sensors::LabelSet& L() { return sensors::LabelSet::standard(); }

DecisionInputs make(std::optional<int> x1, int x2, const std::optional<std::string>& label,
                    double T = 2.5) {
  DecisionInputs in;
  in.x1 = x1;
  in.x2 = x2;
  if (label) in.x3 = sensors::LabelScore{*label, 0.8};
  in.t_safe = T;
  return in;
}

std::vector<std::optional<std::string>> label_options() {
  std::vector<std::optional<std::string>> out{std::nullopt};
  for (const auto& l : L().labels()) out.push_back(l);
  return out;
}

}  // namespace

TEST(DecisionNavigation, ExhaustiveTruthTable) {
  int checked = 0;
  for (double T : {0.5, 2.5, 4.0}) {
    for (int x1 : {0, 1}) {
      for (int x2 = 0; x2 <= 12; ++x2) {
        for (const auto& label : label_options()) {
          auto expect = nav_oracle(x1, x2, label, T);
          auto in = make(x1, x2, label, T);
          if (expect) {
            EXPECT_EQ(decision::decide_navigation(in), *expect);
          } else {
            EXPECT_THROW(decision::decide_navigation(in), DecisionError);
          }
          ++checked;
        }
      }
    }
  }
  EXPECT_EQ(checked, 3 * 2 * 13 * 9);
}

TEST(DecisionNavigation, Examples) {
  EXPECT_EQ(decision::decide_navigation(make(0, 1, std::nullopt)), Action::Proceed);
  EXPECT_EQ(decision::decide_navigation(make(1, 1, "foreign_object_off_path")),
            Action::HaltAutoResume);
  EXPECT_EQ(decision::decide_navigation(make(0, 9, "spillage")), Action::HaltAwaitConsent);
  // Threshold is strict: x2 equal to T does not trigger.
  EXPECT_EQ(decision::decide_navigation(make(0, 3, std::nullopt, 3.0)), Action::Proceed);
}

TEST(DecisionNavigation, ErrorKinds) {
  auto code = [](const DecisionInputs& in) {
    try {
      decision::decide_navigation(in);
    } catch (const DecisionError& e) {
      return std::optional<ErrorCode>(e.code());
    }
    return std::optional<ErrorCode>();
  };
  EXPECT_EQ(code(make(1, 0, std::nullopt)), ErrorCode::MissingSecondary);
  EXPECT_EQ(code(make(0, 0, "spillage")), ErrorCode::SpuriousSecondary);
  EXPECT_EQ(code(make(0, -1, std::nullopt)), ErrorCode::InvalidInput);
  EXPECT_EQ(code(make(2, 0, std::nullopt)), ErrorCode::InvalidInput);
  EXPECT_EQ(code(make(std::nullopt, 0, std::nullopt)), ErrorCode::InvalidInput);
  EXPECT_EQ(code(make(1, 0, "unicorn")), ErrorCode::InvalidInput);
  EXPECT_EQ(code(make(0, 0, std::nullopt, 0.0)), ErrorCode::InvalidInput);
}

TEST(DecisionNavigation, SeverityIsMonotoneInInputs) {
  // Worsening: x1 0 -> 1, x2 up, label safe -> unsafe. Labels are only
  // supplied where the contract requires them.
  const std::vector<std::string> safe = {"no_problem_detected", "foreign_object_off_path"};
  const std::vector<std::string> unsafe = {"spillage", "obstruction", "broken_glass"};
  auto act = [](int x1, int x2, bool bad, const std::string& s, const std::string& u) {
    bool trig = decision::navigation_trigger(x1, x2, 2.5);
    return decision::decide_navigation(
        make(x1, x2, trig ? std::optional<std::string>(bad ? u : s) : std::nullopt));
  };
  int pairs = 0;
  for (const auto& s : safe) {
    for (const auto& u : unsafe) {
      for (int x1 = 0; x1 <= 1; ++x1) {
        for (int x2 = 0; x2 <= 8; ++x2) {
          for (int bad = 0; bad <= 1; ++bad) {
            Action a = act(x1, x2, bad, s, u);
            for (int x1b = x1; x1b <= 1; ++x1b) {
              for (int x2b = x2; x2b <= 8; ++x2b) {
                for (int badb = bad; badb <= 1; ++badb) {
                  EXPECT_GE(severity(act(x1b, x2b, badb, s, u)), severity(a));
                  ++pairs;
                }
              }
            }
          }
        }
      }
    }
  }
  EXPECT_GT(pairs, 1000);
}

TEST(DecisionManipulation, InitialPhase) {
  for (int x2 = 0; x2 <= 10; ++x2) {
    Action expect = x2 < 2.5 ? Action::Proceed : Action::HaltAwaitConsent;
    EXPECT_EQ(decision::decide_manipulation(make(std::nullopt, x2, std::nullopt), Phase::InitialVoc),
              expect);
  }
  // At the threshold the initial check is inclusive, unlike navigation.
  EXPECT_EQ(decision::decide_manipulation(make(std::nullopt, 3, std::nullopt, 3.0), Phase::InitialVoc),
            Action::HaltAwaitConsent);
  EXPECT_THROW(decision::decide_manipulation(make(1, 0, std::nullopt), Phase::InitialVoc),
               DecisionError);
}

TEST(DecisionManipulation, PostVisionTable) {
  for (int x2 = 0; x2 <= 6; ++x2) {
    EXPECT_EQ(decision::decide_manipulation(make(0, x2, std::nullopt), Phase::PostVision),
              Action::Proceed);
    for (const auto& l : L().labels()) {
      Action expect = L().is_safe(l) ? Action::HaltAutoResume : Action::HaltAwaitConsent;
      EXPECT_EQ(decision::decide_manipulation(make(1, x2, l), Phase::PostVision), expect);
    }
  }
  EXPECT_EQ(decision::decide_manipulation(make(1, 0, "obstruction"), Phase::PostVision),
            Action::HaltAwaitConsent);
  try {
    decision::decide_manipulation(make(1, 0, std::nullopt), Phase::PostVision);
    FAIL();
  } catch (const DecisionError& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingSecondary);
  }
  try {
    decision::decide_manipulation(make(std::nullopt, 0, std::nullopt), Phase::PostVision);
    FAIL();
  } catch (const DecisionError& e) {
    EXPECT_EQ(e.code(), ErrorCode::PhaseViolation);
  }
}

TEST(DecisionSeverity, JoinSemilattice) {
  const Action all[] = {Action::Proceed, Action::HaltAutoResume, Action::HaltAwaitConsent};
  for (Action a : all) {
    EXPECT_EQ(severity_max(a, a), a);
    EXPECT_EQ(severity_max(a, Action::Proceed), a);
    for (Action b : all) {
      EXPECT_EQ(severity_max(a, b), severity_max(b, a));
      EXPECT_GE(severity(severity_max(a, b)), severity(a));
      for (Action c : all) {
        EXPECT_EQ(severity_max(severity_max(a, b), c), severity_max(a, severity_max(b, c)));
      }
    }
  }
  EXPECT_EQ(action_from_string("a2"), Action::HaltAutoResume);
  EXPECT_EQ(action_from_string(to_string(Action::HaltAwaitConsent)), Action::HaltAwaitConsent);
  EXPECT_FALSE(action_from_string("a4"));
}
