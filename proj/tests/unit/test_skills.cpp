#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>

#include "prevent/skills/skills.hpp"
#include "prevent/world/scenario.hpp"
#include "support/equivalence.hpp"

using namespace prevent;
using skills::ModalityConfig;
using skills::Skill;
using namespace prevent::testing;

namespace {

skills::SkillOutcome run_det(const std::string& id, const std::string& modalities = "multi",
                             double consent = 5.0) {
  auto spec = world::find_scenario(id);
  auto cfg = config_for(spec, modalities);
  auto w = world::make_world(spec, spec.seed);
  skills::Perception p(cfg, spec.seed, true);
  skills::AutoConsent c(consent);
  return skills::run_skill(request_for(spec), w, p, c, cfg);
}

}  // namespace

TEST(SkillTrees, ShippedTreesValidateAgainstRegistry) {
  auto cin = skills::build_cin_tree();
  auto ibm = skills::build_ibm_tree();
  EXPECT_TRUE(dsl::validate(cin, skills::leaf_registry()).empty());
  EXPECT_TRUE(dsl::validate(ibm, skills::leaf_registry()).empty());
  EXPECT_EQ(cin.root.kind(), bt::NodeKind::Parallel);
  EXPECT_EQ(ibm.root.kind(), bt::NodeKind::Sequence);
}

TEST(SkillTrees, EmbeddedTextMatchesDataFiles) {
  auto read = [](const char* name) {
    std::ifstream in(world::data_dir() / "trees" / name);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  EXPECT_EQ(skills::cin_tree_text(), read("cin.bt"));
  EXPECT_EQ(skills::ibm_tree_text(), read("ibm.bt"));
}

TEST(ModalityConfigNames, RoundTrip) {
  for (const auto& n : kConfigNames) {
    auto c = ModalityConfig::from_name(n);
    ASSERT_TRUE(c) << n;
    EXPECT_EQ(c->name(), n);
  }
  EXPECT_FALSE(ModalityConfig::from_name("sonar"));
  EXPECT_FALSE(ModalityConfig::from_name("vision+"));
  EXPECT_FALSE(ModalityConfig::from_name("vision")->hierarchical);
}

TEST(SkillEquivalence, TreeMatchesImperativeAlgorithmOnEveryScenario) {
  auto ids = world::list_scenarios();
  ASSERT_GE(ids.size(), 15u);
  int compared = 0;
  for (const auto& id : ids) {
    auto spec = world::find_scenario(id);
    for (const auto& modalities : kConfigNames) {
      for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        for (bool deterministic : {true, false}) {
          double lo = seed % 2 ? 5.0 : 60.0, hi = seed % 2 ? 5.0 : 300.0;
          auto [tree, oracle] = run_both(spec, modalities, seed, deterministic, lo, hi);
          SCOPED_TRACE(id + " " + modalities + " seed " + std::to_string(seed) +
                       (deterministic ? " det" : " stoch"));
          EXPECT_EQ(tree.actions, oracle.actions);
          EXPECT_EQ(tree.final_action, oracle.final_action);
          EXPECT_EQ(tree.alerts.size(), oracle.alerts.size());
          EXPECT_EQ(tree.halts, oracle.halts);
          EXPECT_EQ(tree.completed, oracle.completed);
          EXPECT_EQ(tree.failure, oracle.failure);
          EXPECT_NEAR(tree.duration, oracle.duration, 1e-6);
          ASSERT_EQ(tree.consent_waits.size(), oracle.consent_waits.size());
          for (std::size_t i = 0; i < tree.consent_waits.size(); ++i) {
            EXPECT_NEAR(tree.consent_waits[i].start, oracle.consent_waits[i].start, 1e-6);
            EXPECT_NEAR(tree.consent_waits[i].end, oracle.consent_waits[i].end, 1e-6);
          }
          ++compared;
        }
      }
    }
  }
  EXPECT_EQ(compared, static_cast<int>(ids.size() * kConfigNames.size() * 12));
}

TEST(SkillScenarios, MultiModalMatchesExpectedActionOnFigureScenarios) {
  for (const char* id : {"S1", "S2", "S3", "S4", "S5", "S6"}) {
    auto spec = world::find_scenario(id);
    auto out = run_det(id);
    EXPECT_EQ(out.final_action, spec.expected_action) << id;
    EXPECT_TRUE(out.completed) << id;
    EXPECT_FALSE(out.workflow_failure) << id;
  }
}

TEST(SkillScenarios, NoHazardRunsProceedWithoutHalts) {
  struct Case {
    const char* id;
    double duration;
  };
  for (auto c : {Case{"T1_NH", 128.2}, Case{"T2_NH", 151.0}, Case{"T3_NH", 211.6}}) {
    auto out = run_det(c.id);
    EXPECT_TRUE(out.completed) << c.id;
    EXPECT_EQ(out.halts, 0) << c.id;
    EXPECT_EQ(out.final_action, Action::Proceed) << c.id;
    // Deterministic runs still carry the per-run jitter; 1% covers it.
    EXPECT_NEAR(out.duration, c.duration, 0.01 * c.duration) << c.id;
  }
}

TEST(SkillScenarios, OutcomeInvariantsHoldOnAllRuns) {
  for (const auto& id : world::list_scenarios()) {
    for (const auto& modalities : kConfigNames) {
      auto out = run_det(id, modalities);
      bool a3 = std::count(out.actions.begin(), out.actions.end(), Action::HaltAwaitConsent) > 0;
      EXPECT_EQ(a3, !out.alerts.empty() && !out.consent_waits.empty()) << id << " " << modalities;
      EXPECT_FALSE(out.completed && out.workflow_failure) << id << " " << modalities;
    }
  }
}

TEST(SkillConsent, AbortEndsTheRun) {
  auto spec = world::find_scenario("S5");
  auto cfg = config_for(spec, "multi");
  auto w = world::make_world(spec, 1);
  skills::Perception p(cfg, 1, true);
  skills::QueuedConsent c;
  c.push(skills::ConsentCommand::Abort);
  auto out = skills::run_skill(request_for(spec), w, p, c, cfg);
  EXPECT_FALSE(out.completed);
  EXPECT_EQ(out.failure, world::FailureMode::Abort);
  EXPECT_FALSE(out.workflow_failure);
  EXPECT_EQ(out.alerts.size(), 1u);
}

TEST(SkillConsent, SilenceTimesOut) {
  auto spec = world::find_scenario("S2");
  auto cfg = config_for(spec, "multi");
  auto w = world::make_world(spec, 1);
  skills::Perception p(cfg, 1, true);
  skills::NoConsent c;
  auto out = skills::run_skill(request_for(spec), w, p, c, cfg);
  EXPECT_TRUE(out.timed_out);
  EXPECT_FALSE(out.completed);
  ASSERT_EQ(out.consent_waits.size(), 1u);
  EXPECT_NEAR(out.consent_waits[0].end - out.consent_waits[0].start, cfg.timing.abort_timeout, 0.11);
}

TEST(SkillConsent, AutoConsentDelayShowsInWait) {
  auto out = run_det("S3", "multi", 5.0);
  ASSERT_EQ(out.consent_waits.size(), 1u);
  EXPECT_NEAR(out.consent_waits[0].end - out.consent_waits[0].start, 5.0, 0.11);
  EXPECT_TRUE(out.completed);
}

TEST(SkillEvents, HaltPrecedesAlertAndResume) {
  auto spec = world::find_scenario("S2");
  auto cfg = config_for(spec, "multi");
  auto w = world::make_world(spec, 1);
  skills::Perception p(cfg, 1, true);
  skills::AutoConsent c(2.0);
  std::vector<skills::SkillEvent::Kind> kinds;
  std::optional<skills::AlertPayload> alert;
  skills::run_skill(request_for(spec), w, p, c, cfg, [&](const skills::SkillEvent& e) {
    kinds.push_back(e.kind);
    if (e.alert) alert = e.alert;
  });
  using K = skills::SkillEvent::Kind;
  std::vector<K> expected = {K::Halted, K::Classified, K::AlertRaised, K::ConsentReceived, K::Resumed};
  EXPECT_EQ(kinds, expected);
  ASSERT_TRUE(alert);
  EXPECT_GT(alert->x2, 2.5);
  ASSERT_TRUE(alert->x3);
  EXPECT_EQ(alert->x3->label, "spillage");
  EXPECT_EQ(alert->scenario_id, "S2");
}

TEST(SkillHierarchy, ClassifierOnlyConsultedAfterTrigger) {
  for (const auto& id : world::list_scenarios()) {
    auto spec = world::find_scenario(id);
    auto cfg = config_for(spec, "multi");
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      auto w = world::make_world(spec, seed);
      skills::Perception p(cfg, seed, false);
      skills::AutoConsent c(1.0);
      auto out = skills::run_skill(request_for(spec), w, p, c, cfg);
      const auto& log = p.log();
      int classifier = 0;
      for (const auto& r : log) classifier += r.kind == skills::SampleRecord::Kind::Classifier;
      // Each halt episode asks for exactly one vote of three looks.
      int episodes = out.halts;
      if (spec.skill == "ibm") {
        // The initial VOC halt goes straight to the operator.
        for (const auto& r : log) {
          if (r.kind == skills::SampleRecord::Kind::Voc && r.t == 0.0 && r.value >= cfg.t_safe) --episodes;
        }
      }
      EXPECT_EQ(classifier, episodes * cfg.timing.classify_looks) << id << " seed " << seed;
    }
  }
}

TEST(SkillHierarchy, OrFusionNeverConsultsClassifier) {
  for (const auto& id : world::list_scenarios()) {
    auto spec = world::find_scenario(id);
    for (const auto& modalities : kConfigNames) {
      if (modalities == "multi") continue;
      auto cfg = config_for(spec, modalities);
      auto w = world::make_world(spec, 3);
      skills::Perception p(cfg, 3, false);
      skills::AutoConsent c(1.0);
      auto out = skills::run_skill(request_for(spec), w, p, c, cfg);
      for (const auto& r : p.log()) EXPECT_NE(r.kind, skills::SampleRecord::Kind::Classifier);
      EXPECT_EQ(std::count(out.actions.begin(), out.actions.end(), Action::HaltAutoResume), 0);
    }
  }
}

TEST(SkillRunnerApi, RejectsBadRequests) {
  auto spec = world::find_scenario("T2_NH");
  auto cfg = config_for(spec, "multi");
  auto w = world::make_world(spec, 1);
  skills::Perception p(cfg, 1, true);
  skills::NoConsent c;
  try {
    skills::run_skill({Skill::IBM, "chemspeed", "x"}, w, p, c, cfg);
    FAIL() << "expected InvalidRequest";
  } catch (const skills::SkillError& e) {
    EXPECT_EQ(e.code(), skills::ErrorCode::InvalidRequest);
  }
  EXPECT_THROW(skills::run_skill({Skill::CIN, "nowhere", "x"}, w, p, c, cfg), skills::SkillError);
}

TEST(SkillRunnerApi, RequestAbortStopsAtNextStep) {
  auto spec = world::find_scenario("T1_NH");
  auto cfg = config_for(spec, "multi");
  auto w = world::make_world(spec, 1);
  skills::Perception p(cfg, 1, true);
  skills::NoConsent c;
  skills::SkillRunner r(request_for(spec), w, p, c, cfg);
  for (int i = 0; i < 50; ++i) ASSERT_TRUE(r.step());
  r.request_abort();
  EXPECT_FALSE(r.step());
  EXPECT_TRUE(r.done());
  EXPECT_EQ(r.outcome().failure, world::FailureMode::Abort);
}

TEST(SkillNse, HazardRunsFailAndCleanRunsMatchCalibration) {
  struct Case {
    const char* id;
    bool ok;
    double duration;
  };
  for (auto c : {Case{"T1_NH", true, 119.1}, Case{"T2_NH", true, 131.0}, Case{"T3_NH", true, 134.9},
                 Case{"T1_OH", false, 0}, Case{"T2_OH", false, 0}, Case{"T3_LSH", false, 0},
                 Case{"S5", false, 0}}) {
    auto spec = world::find_scenario(c.id);
    auto cfg = config_for(spec, "multi");
    auto w = world::make_world(spec, 7);
    auto out = skills::run_nse(request_for(spec), w, cfg);
    EXPECT_EQ(out.completed, c.ok) << c.id;
    EXPECT_EQ(out.workflow_failure, !c.ok) << c.id;
    if (c.ok) EXPECT_NEAR(out.duration, c.duration, 0.01 * c.duration) << c.id;
  }
}

TEST(SkillDeterminism, SameSeedSameTrace) {
  auto spec = world::find_scenario("S3");
  auto cfg = config_for(spec, "multi");
  auto once = [&] {
    auto w = world::make_world(spec, 11);
    skills::Perception p(cfg, 11, false);
    skills::AutoConsent c(3.0);
    bt::TraceLog trace;
    skills::run_skill(request_for(spec), w, p, c, cfg, {}, &trace);
    return trace;
  };
  auto a = once(), b = once();
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
}
