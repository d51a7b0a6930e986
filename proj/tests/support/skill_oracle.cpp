#include "support/skill_oracle.hpp"

#include <algorithm>

namespace prevent::testing {

using skills::ConsentCommand;
using skills::SkillOutcome;

namespace {

constexpr double kEps = 1e-9;

struct Run {
  world::World& w;
  skills::Perception& p;
  skills::ConsentSource& consent;
  const skills::SkillConfig& cfg;
  SkillOutcome out;
  double start;

  void step() { w.step(cfg.timing.dt); }

  void record(Action a) {
    out.actions.push_back(a);
    if (static_cast<int>(a) > static_cast<int>(out.final_action)) out.final_action = a;
  }

  void alert() {
    out.alerts.emplace_back();
    record(Action::HaltAwaitConsent);
  }

  bool unsafe(const sensors::LabelScore& l) const { return !cfg.labels->is_safe(l.label); }

  enum class Answer { Continue, Abort, TimedOut };

  // Polls once per tick; the answering tick does not advance the clock.
  Answer wait_for_consent() {
    const double since = w.now();
    for (;;) {
      if (auto cmd = consent.poll(w.now(), since)) {
        out.consent_waits.push_back({since, w.now()});
        if (*cmd == ConsentCommand::Abort) {
          w.fail(world::FailureMode::Abort);
          return Answer::Abort;
        }
        return Answer::Continue;
      }
      if (w.now() - since + kEps >= cfg.timing.abort_timeout) {
        out.consent_waits.push_back({since, w.now()});
        out.timed_out = true;
        w.fail(world::FailureMode::Abort);
        return Answer::TimedOut;
      }
      step();
    }
  }

  void arm_wait() {
    step();
    while (w.arm_busy()) step();
  }

  void pause(double seconds) {
    const double since = w.now();
    do {
      step();
    } while (w.now() + kEps < since + seconds);
  }

  SkillOutcome finish(bool success) {
    out.failure = w.failure();
    out.completed = success && !out.failure;
    out.workflow_failure = out.failure && *out.failure != world::FailureMode::Abort;
    out.duration = w.now() - start;
    return out;
  }
};

}  // namespace

SkillOutcome navigation_oracle(const skills::SkillRequest& req, world::World& w,
                               skills::Perception& p, skills::ConsentSource& consent,
                               const skills::SkillConfig& cfg) {
  Run run{w, p, consent, cfg, {}, w.now()};
  run.out.skill = skills::Skill::CIN;
  const auto& m = cfg.modalities;
  const double T = cfg.t_safe;
  const auto jitter = skills::draw_jitter(w, cfg.timing);
  w.robot().speed_factor = cfg.timing.cin_speed_factor() * jitter.speed;
  w.begin_navigation(req.target);

  bool latch_vision = false, latch_voc = false, latch_vlm = false;
  enum class State { Moving, Classifying, Waiting } state = State::Moving;
  double classify_since = 0.0;
  bool fired_vision = false, fired_voc = false, fired_vlm = false;
  int x1 = 0, x2 = 0;

  auto resume = [&] {
    w.resume_robot();
    fired_vision = fired_voc = fired_vlm = false;
    state = State::Moving;
  };

  for (;;) {
    if (w.failure()) return run.finish(false);
    if (w.robot().motion == world::MotionState::Idle && w.robot().node == req.target) {
      return run.finish(true);
    }

    if (state == State::Moving && w.navigating()) {
      x1 = m.vision ? p.nav_vision(w) : 0;
      x2 = m.voc ? p.voc(w, w.robot().position) : 0;
      std::optional<sensors::LabelScore> vlm;
      if (m.vlm && !m.hierarchical) vlm = p.vlm_nav(w);

      fired_vision = m.vision && x1 == 1 && !latch_vision;
      fired_voc = m.voc && x2 > T && !latch_voc;
      fired_vlm = vlm && run.unsafe(*vlm) && !latch_vlm;
      if (x1 == 0) latch_vision = false;
      if (x2 <= T) latch_voc = false;
      if (vlm && !run.unsafe(*vlm)) latch_vlm = false;

      if (fired_vision || fired_voc || fired_vlm) {
        w.halt_robot();
        ++run.out.halts;
        if (m.hierarchical) {
          state = State::Classifying;
          classify_since = w.now();
        } else {
          run.alert();
          state = State::Waiting;
        }
      }
    }

    if (state == State::Classifying &&
        w.now() + kEps >= classify_since + cfg.timing.classify_look * cfg.timing.classify_looks) {
      auto x3 = p.vote(w, p.cin_truth(w), false);
      if (!run.unsafe(x3)) {
        run.record(Action::HaltAutoResume);
        if (fired_voc) latch_voc = true;
        resume();
      } else {
        run.alert();
        state = State::Waiting;
      }
    }

    if (state == State::Waiting) {
      auto answer = run.wait_for_consent();
      if (answer != Run::Answer::Continue) return run.finish(false);
      w.clear_hazards_near(w.robot().position, cfg.timing.cin_classifier_range);
      latch_vision = latch_vision || fired_vision;
      latch_voc = latch_voc || fired_voc;
      latch_vlm = latch_vlm || fired_vlm;
      resume();
    }

    run.step();
  }
}

SkillOutcome manipulation_oracle(const skills::SkillRequest& req, world::World& w,
                                 skills::Perception& p, skills::ConsentSource& consent,
                                 const skills::SkillConfig& cfg) {
  Run run{w, p, consent, cfg, {}, w.now()};
  run.out.skill = skills::Skill::IBM;
  const auto& m = cfg.modalities;
  const double T = cfg.t_safe;
  const auto& t = cfg.timing;
  const auto& st = w.station(req.target);
  const auto jitter = skills::draw_jitter(w, t);

  // One-shot VOC check on arrival.
  const int x2 = m.voc ? p.voc(w, w.robot().position) : 0;
  if (!(x2 < T)) {
    ++run.out.halts;
    run.alert();
    if (run.wait_for_consent() != Run::Answer::Continue) return run.finish(false);
    w.clear_hazards_near(st.target, t.ibm_clear_radius);
  }

  w.arm_move_to_check_pose(st.id, std::max(0.0, t.initial_voc + st.move_check_duration + jitter.arm_offset));
  run.arm_wait();
  w.occupy_arm(t.vision_burst);
  run.arm_wait();

  const int x1 = m.vision ? p.station_vision(w, st) : 0;
  bool detect = x1 == 1;
  if (!m.hierarchical) {
    if (m.voc && p.voc(w, st.check_sensor) > T) detect = true;
    if (m.vlm && run.unsafe(p.vlm_station(w, st))) detect = true;
  }

  if (detect) {
    ++run.out.halts;
    bool safe = false;
    if (m.hierarchical) {
      run.pause(t.classify_look * t.classify_looks);
      safe = !run.unsafe(p.vote(w, p.ibm_truth(w, st), true));
    }
    if (safe) {
      run.record(Action::HaltAutoResume);
    } else {
      if (m.voc) {
        w.occupy_arm(t.mid_voc);
        run.arm_wait();
        p.voc(w, st.grasp, skills::SampleRecord::Kind::MidVoc);
      }
      run.alert();
      if (run.wait_for_consent() != Run::Answer::Continue) return run.finish(false);
      w.clear_hazards_near(st.target, t.ibm_clear_radius);
    }
  }

  auto r = w.execute_manipulation(st.id, std::max(0.0, st.manipulation_duration + jitter.arm_offset));
  if (!r.ok) return run.finish(false);
  run.arm_wait();
  return run.finish(true);
}

}  // namespace prevent::testing
