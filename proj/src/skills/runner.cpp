#include <algorithm>
#include <cmath>
#include <sstream>

#include "prevent/decision/decision.hpp"
#include "prevent/skills/skills.hpp"

namespace prevent::skills {

using bt::LeafContext;
using bt::NodeStatus;

namespace {

constexpr const char* kRuntimeKey = "runtime";

struct LeafState {
  int phase = 0;
  double since = 0.0;
  bool done = false;
};

}  // namespace

struct SkillRunner::Runtime {
  SkillRequest request;
  world::World& w;
  Perception& p;
  ConsentSource& consent;
  SkillConfig cfg;
  SkillObserver observer;
  bt::TraceLog* trace;

  std::optional<dsl::TreeDocument> doc;
  bt::Blackboard bb;
  SkillOutcome out;
  RunJitter jitter;
  double start_time = 0.0;
  bool finished = false;
  bool abort_requested = false;
  bool awaiting = false;

  std::map<std::string, LeafState, std::less<>> leaf;

  // Navigation monitor.
  bool nav_started = false;
  bool episode = false;
  bool fired_vision = false, fired_voc = false, fired_vlm = false;
  bool latch_vision = false, latch_voc = false, latch_vlm = false;
  std::optional<Action> episode_action;
  sensors::ModalityFrame frame;

  // Station inspection.
  std::optional<int> initial_x2;
  bool initial_alert = false;
  int station_x1 = 0;
  int check_voc = 0;
  std::optional<sensors::LabelScore> station_vlm;
  bool station_detect = false;
  std::optional<int> mid_voc;

  Runtime(SkillRequest req, world::World& world, Perception& perception, ConsentSource& c,
          SkillConfig config, SkillObserver obs, bt::TraceLog* t)
      : request(std::move(req)), w(world), p(perception), consent(c), cfg(std::move(config)),
        observer(std::move(obs)), trace(t) {}

  bool cin() const { return request.skill == Skill::CIN; }
  const world::Station& station() const { return w.station(request.target); }
  LeafState& state(std::string_view path) { return leaf[std::string(path)]; }

  void emit(SkillEvent e) {
    e.t = w.now();
    if (observer) observer(e);
  }

  void record(Action a) {
    out.actions.push_back(a);
    out.final_action = severity_max(out.final_action, a);
  }

  void halted(const std::string& detail) {
    ++out.halts;
    emit({SkillEvent::Kind::Halted, 0.0, std::nullopt, std::nullopt, detail});
  }

  decision::DecisionInputs inputs() const {
    decision::DecisionInputs in;
    in.t_safe = cfg.t_safe;
    in.labels = cfg.labels;
    return in;
  }

  void finish(bool success) {
    finished = true;
    awaiting = false;
    out.failure = w.failure();
    out.completed = success && !out.failure;
    out.workflow_failure = out.failure && *out.failure != world::FailureMode::Abort;
    out.duration = w.now() - start_time;
  }
};

namespace {

SkillRunner::Runtime& rt_of(LeafContext& ctx) {
  return *ctx.bb.get<SkillRunner::Runtime*>(kRuntimeKey);
}

NodeStatus ok(bool b) { return b ? NodeStatus::Success : NodeStatus::Failure; }

std::string describe(const AlertPayload& a) {
  std::ostringstream ss;
  if (a.x3) {
    ss << a.x3->label;
  } else {
    ss << "hazard";
  }
  ss << " (";
  if (a.x1) ss << "x1=" << *a.x1 << ", ";
  ss << "x2=" << a.x2;
  if (a.mid_voc) ss << ", mid_voc=" << *a.mid_voc;
  ss << ")";
  return ss.str();
}

// ---- Navigation leaves ----

NodeStatus start_to_node(LeafContext& ctx) {
  auto& rt = rt_of(ctx);
  if (rt.w.failure()) return NodeStatus::Failure;
  if (!rt.nav_started) {
    rt.w.begin_navigation(rt.request.target);
    rt.nav_started = true;
  }
  const auto& r = rt.w.robot();
  if (r.motion == world::MotionState::Idle && r.node == rt.request.target) return NodeStatus::Success;
  return NodeStatus::Running;
}

NodeStatus no_hazard_detected(LeafContext& ctx) {
  auto& rt = rt_of(ctx);
  if (rt.episode) return NodeStatus::Failure;
  if (!rt.w.navigating()) return NodeStatus::Success;
  const auto& m = rt.cfg.modalities;
  const double T = rt.cfg.t_safe;
  const auto& labels = *rt.cfg.labels;

  sensors::ModalityFrame f;
  f.timestamp = rt.w.now();
  if (m.vision) f.x1 = rt.p.nav_vision(rt.w);
  if (m.voc) f.x2 = rt.p.voc(rt.w, rt.w.robot().position);
  std::optional<sensors::LabelScore> vlm;
  if (m.vlm && !m.hierarchical) vlm = rt.p.vlm_nav(rt.w);

  const bool vision = m.vision && f.x1 == 1 && !rt.latch_vision;
  const bool voc = m.voc && f.x2 > T && !rt.latch_voc;
  const bool vlm_fire = vlm && labels.is_unsafe(vlm->label) && !rt.latch_vlm;

  if (m.vision && f.x1 == 0) rt.latch_vision = false;
  if (m.voc && f.x2 <= T) rt.latch_voc = false;
  if (vlm && labels.is_safe(vlm->label)) rt.latch_vlm = false;

  if (!(vision || voc || vlm_fire)) return NodeStatus::Success;
  rt.episode = true;
  rt.fired_vision = vision;
  rt.fired_voc = voc;
  rt.fired_vlm = vlm_fire;
  if (vlm_fire) f.x3 = vlm;
  rt.frame = f;
  return NodeStatus::Failure;
}

NodeStatus stop_robot(LeafContext& ctx) {
  auto& rt = rt_of(ctx);
  auto& s = rt.state(ctx.path);
  if (!s.done) {
    if (rt.w.navigating()) rt.w.halt_robot();
    s.done = true;
    rt.halted("navigation halted");
  }
  return NodeStatus::Success;
}

NodeStatus classify_hazard(LeafContext& ctx) {
  auto& rt = rt_of(ctx);
  auto& s = rt.state(ctx.path);
  if (s.done) return NodeStatus::Success;
  if (!rt.cfg.modalities.hierarchical) {
    // OR-fusion has no secondary stage; a standalone VLM label is carried over.
    if (!rt.cin() && rt.station_vlm) rt.frame.x3 = rt.station_vlm;
    s.done = true;
    return NodeStatus::Success;
  }
  const auto& t = rt.cfg.timing;
  if (s.phase == 0) {
    s.phase = 1;
    s.since = rt.w.now();
  }
  if (rt.w.now() + 1e-9 < s.since + t.classify_look * t.classify_looks) return NodeStatus::Running;
  const std::string truth = rt.cin() ? rt.p.cin_truth(rt.w) : rt.p.ibm_truth(rt.w, rt.station());
  rt.frame.x3 = rt.p.vote(rt.w, truth, !rt.cin());
  s.done = true;
  rt.emit({SkillEvent::Kind::Classified, 0.0, std::nullopt, std::nullopt, rt.frame.x3->label});
  return NodeStatus::Success;
}

NodeStatus hazard_classified_safe(LeafContext& ctx) {
  auto& rt = rt_of(ctx);
  if (!rt.cfg.modalities.hierarchical || !rt.frame.x3) return NodeStatus::Failure;
  auto& s = rt.state(ctx.path);
  if (s.done) return NodeStatus::Success;
  auto in = rt.inputs();
  in.x3 = rt.frame.x3;
  Action a;
  if (rt.cin()) {
    in.x1 = rt.frame.x1;
    in.x2 = rt.frame.x2;
    a = decision::decide_navigation(in);
  } else {
    in.x1 = rt.station_x1;
    in.x2 = rt.initial_x2.value_or(0);
    a = decision::decide_manipulation(in, decision::Phase::PostVision);
  }
  if (a != Action::HaltAutoResume) return NodeStatus::Failure;
  s.done = true;
  rt.episode_action = a;
  rt.record(a);
  if (!rt.cin()) rt.emit({SkillEvent::Kind::Resumed, 0.0, std::nullopt, a, "manipulation resumed"});
  return NodeStatus::Success;
}

NodeStatus alert_user(LeafContext& ctx) {
  auto& rt = rt_of(ctx);
  auto& s = rt.state(ctx.path);
  if (s.done) return NodeStatus::Success;
  s.done = true;
  AlertPayload a;
  if (rt.cin()) {
    if (rt.cfg.modalities.vision) a.x1 = rt.frame.x1;
    a.x2 = rt.frame.x2;
    a.x3 = rt.frame.x3;
  } else if (rt.initial_alert && !rt.station_detect) {
    a.x2 = rt.initial_x2.value_or(0);
  } else {
    a.x1 = rt.station_x1;
    a.x2 = rt.mid_voc ? *rt.mid_voc : std::max(rt.check_voc, rt.initial_x2.value_or(0));
    a.x3 = rt.frame.x3;
    a.mid_voc = rt.mid_voc;
  }
  a.scenario_id = rt.request.scenario_id;
  a.pose = rt.w.robot().position;
  a.tick = ctx.bb.tick_count();
  a.timestamp = rt.w.now();
  a.summary = describe(a);
  rt.out.alerts.push_back(a);
  rt.episode_action = Action::HaltAwaitConsent;
  rt.record(Action::HaltAwaitConsent);
  rt.emit({SkillEvent::Kind::AlertRaised, 0.0, a, Action::HaltAwaitConsent, a.summary});
  return NodeStatus::Success;
}

NodeStatus get_consent(LeafContext& ctx) {
  auto& rt = rt_of(ctx);
  auto& s = rt.state(ctx.path);
  if (s.done) return NodeStatus::Success;
  if (s.phase == 0) {
    s.phase = 1;
    s.since = rt.w.now();
    rt.awaiting = true;
  }
  auto cmd = rt.consent.poll(rt.w.now(), s.since);
  if (!cmd) {
    if (rt.w.now() - s.since + 1e-9 >= rt.cfg.timing.abort_timeout) {
      rt.awaiting = false;
      rt.out.timed_out = true;
      rt.out.consent_waits.push_back({s.since, rt.w.now()});
      rt.w.fail(world::FailureMode::Abort);
      return NodeStatus::Failure;
    }
    return NodeStatus::Running;
  }
  rt.awaiting = false;
  rt.out.consent_waits.push_back({s.since, rt.w.now()});
  if (*cmd == ConsentCommand::Abort) {
    rt.w.fail(world::FailureMode::Abort);
    rt.emit({SkillEvent::Kind::ConsentReceived, 0.0, std::nullopt, std::nullopt, "abort"});
    return NodeStatus::Failure;
  }
  // The operator deals with the hazard before answering.
  if (rt.cin()) {
    rt.w.clear_hazards_near(rt.w.robot().position, rt.cfg.timing.cin_classifier_range);
  } else {
    rt.w.clear_hazards_near(rt.station().target, rt.cfg.timing.ibm_clear_radius);
  }
  rt.latch_vision = rt.latch_vision || rt.fired_vision;
  rt.latch_voc = rt.latch_voc || rt.fired_voc;
  rt.latch_vlm = rt.latch_vlm || rt.fired_vlm;
  s.done = true;
  rt.emit({SkillEvent::Kind::ConsentReceived, 0.0, std::nullopt, std::nullopt, "continue"});
  if (!rt.cin()) {
    rt.emit({SkillEvent::Kind::Resumed, 0.0, std::nullopt, std::nullopt, "manipulation resumed"});
  }
  return NodeStatus::Success;
}

NodeStatus resume_navigation(LeafContext& ctx) {
  auto& rt = rt_of(ctx);
  if (rt.w.robot().motion == world::MotionState::Halted) rt.w.resume_robot();
  if (rt.episode_action == Action::HaltAutoResume && rt.fired_voc) rt.latch_voc = true;
  const auto action = rt.episode_action;
  rt.leaf.clear();
  rt.episode = false;
  rt.fired_vision = rt.fired_voc = rt.fired_vlm = false;
  rt.episode_action.reset();
  rt.frame = {};
  rt.emit({SkillEvent::Kind::Resumed, 0.0, std::nullopt, action, "navigation resumed"});
  return NodeStatus::Success;
}

// ---- Station leaves ----

NodeStatus initial_voc_ok(LeafContext& ctx) {
  auto& rt = rt_of(ctx);
  if (!rt.initial_x2) {
    rt.initial_x2 = rt.cfg.modalities.voc ? rt.p.voc(rt.w, rt.w.robot().position) : 0;
    auto in = rt.inputs();
    in.x2 = *rt.initial_x2;
    if (decision::decide_manipulation(in, decision::Phase::InitialVoc) != Action::Proceed) {
      rt.initial_alert = true;
      rt.fired_voc = true;
      rt.halted("initial VOC above threshold");
    }
  }
  return ok(!rt.initial_alert);
}

NodeStatus calibration_and_move_check(LeafContext& ctx) {
  auto& rt = rt_of(ctx);
  auto& s = rt.state(ctx.path);
  if (s.done) return NodeStatus::Success;
  const auto& t = rt.cfg.timing;
  const auto& m = rt.cfg.modalities;
  if (s.phase == 0) {
    const auto& st = rt.station();
    rt.w.arm_move_to_check_pose(st.id,
                                std::max(0.0, t.initial_voc + st.move_check_duration + rt.jitter.arm_offset));
    s.phase = 1;
    return NodeStatus::Running;
  }
  if (rt.w.arm_busy()) return NodeStatus::Running;
  if (s.phase == 1) {
    rt.w.occupy_arm(t.vision_burst);
    s.phase = 2;
    return NodeStatus::Running;
  }
  const auto& st = rt.station();
  if (m.vision) rt.station_x1 = rt.p.station_vision(rt.w, st);
  bool detect = rt.station_x1 == 1;
  if (!m.hierarchical) {
    if (m.voc) {
      rt.check_voc = rt.p.voc(rt.w, st.check_sensor);
      detect = detect || rt.check_voc > rt.cfg.t_safe;
    }
    if (m.vlm) {
      rt.station_vlm = rt.p.vlm_station(rt.w, st);
      detect = detect || rt.cfg.labels->is_unsafe(rt.station_vlm->label);
    }
  }
  rt.station_detect = detect;
  if (detect) {
    rt.fired_vision = rt.station_x1 == 1;
    rt.halted("hazard at station");
  }
  s.done = true;
  return NodeStatus::Success;
}

NodeStatus vision_binary_clear(LeafContext& ctx) { return ok(!rt_of(ctx).station_detect); }

NodeStatus mid_voc_monitor(LeafContext& ctx) {
  auto& rt = rt_of(ctx);
  auto& s = rt.state(ctx.path);
  if (s.done || !rt.cfg.modalities.voc) return NodeStatus::Success;
  if (s.phase == 0) {
    rt.w.occupy_arm(rt.cfg.timing.mid_voc);
    s.phase = 1;
    return NodeStatus::Running;
  }
  if (rt.w.arm_busy()) return NodeStatus::Running;
  rt.mid_voc = rt.p.voc(rt.w, rt.station().grasp, SampleRecord::Kind::MidVoc);
  s.done = true;
  return NodeStatus::Success;
}

NodeStatus execute_manipulation(LeafContext& ctx) {
  auto& rt = rt_of(ctx);
  auto& s = rt.state(ctx.path);
  if (s.done) return NodeStatus::Success;
  if (s.phase == 0) {
    if (rt.w.arm_busy()) return NodeStatus::Running;
    const auto& st = rt.station();
    auto r = rt.w.execute_manipulation(
        st.id, std::max(0.0, st.manipulation_duration + rt.jitter.arm_offset));
    if (!r.ok) return NodeStatus::Failure;
    s.phase = 1;
    return NodeStatus::Running;
  }
  if (rt.w.arm_busy()) return NodeStatus::Running;
  s.done = true;
  return NodeStatus::Success;
}

}  // namespace

const bt::LeafRegistry& leaf_registry() {
  static const bt::LeafRegistry reg = [] {
    bt::LeafRegistry r;
    r.register_leaf("StartToNode", start_to_node);
    r.register_leaf("NoHazardDetected", no_hazard_detected);
    r.register_leaf("StopRobot", stop_robot);
    r.register_leaf("ClassifyHazard", classify_hazard);
    r.register_leaf("HazardClassifiedSafe", hazard_classified_safe);
    r.register_leaf("AlertUser", alert_user);
    r.register_leaf("GetConsentToContinue", get_consent);
    r.register_leaf("ResumeNavigation", resume_navigation);
    r.register_leaf("InitialVocOk", initial_voc_ok);
    r.register_leaf("CalibrationAndMoveCheck", calibration_and_move_check);
    r.register_leaf("VisionBinaryClear", vision_binary_clear);
    r.register_leaf("MidVocMonitor", mid_voc_monitor);
    r.register_leaf("ExecuteManipulation", execute_manipulation);
    return r;
  }();
  return reg;
}

RunJitter draw_jitter(world::World& w, const Timing& timing) {
  RunJitter j;
  if (timing.speed_jitter > 0.0) {
    j.speed = std::max(0.5, 1.0 + std::normal_distribution<double>(0.0, timing.speed_jitter)(w.rng()));
  }
  if (timing.duration_jitter > 0.0) {
    j.arm_offset = std::normal_distribution<double>(0.0, timing.duration_jitter)(w.rng());
  }
  return j;
}

namespace {

void check_request(const SkillRequest& req, const world::World& w) {
  if (req.skill == Skill::CIN) {
    if (!w.layout().graph.contains(req.target)) {
      throw SkillError(ErrorCode::InvalidRequest, "unknown destination '" + req.target + "'");
    }
    return;
  }
  if (!w.layout().stations.count(req.target)) {
    throw SkillError(ErrorCode::InvalidRequest, "unknown station '" + req.target + "'");
  }
  if (w.robot().node != w.station(req.target).node || w.navigating()) {
    throw SkillError(ErrorCode::InvalidRequest, "robot is not parked at '" + req.target + "'");
  }
}

}  // namespace

SkillRunner::SkillRunner(SkillRequest request, world::World& w, Perception& perception,
                         ConsentSource& consent, SkillConfig config, SkillObserver observer,
                         bt::TraceLog* trace) {
  check_request(request, w);
  rt_ = std::make_unique<Runtime>(std::move(request), w, perception, consent, std::move(config),
                                  std::move(observer), trace);
  rt_->doc.emplace(rt_->cin() ? build_cin_tree() : build_ibm_tree());
  rt_->out.skill = rt_->request.skill;
  rt_->jitter = draw_jitter(w, rt_->cfg.timing);
  if (rt_->cin()) w.robot().speed_factor = rt_->cfg.timing.cin_speed_factor() * rt_->jitter.speed;
  rt_->start_time = w.now();
  rt_->bb.set<Runtime*>(kRuntimeKey, rt_.get());
}

SkillRunner::~SkillRunner() = default;

bool SkillRunner::step() {
  auto& rt = *rt_;
  if (rt.finished) return false;
  if (rt.abort_requested) {
    rt.w.fail(world::FailureMode::Abort);
    rt.finish(false);
    return false;
  }
  rt.bb.set_now(rt.w.now());
  NodeStatus st = bt::tick(rt.doc->root, rt.bb, leaf_registry(), rt.trace);
  if (st != NodeStatus::Running || rt.w.failure()) {
    rt.finish(st == NodeStatus::Success);
    return false;
  }
  rt.w.step(rt.cfg.timing.dt);
  return true;
}

bool SkillRunner::done() const { return rt_->finished; }
const SkillOutcome& SkillRunner::outcome() const { return rt_->out; }
bool SkillRunner::awaiting_consent() const { return rt_->awaiting; }
void SkillRunner::request_abort() { rt_->abort_requested = true; }

SkillOutcome run_skill(const SkillRequest& request, world::World& w, Perception& perception,
                       ConsentSource& consent, const SkillConfig& config, SkillObserver observer,
                       bt::TraceLog* trace) {
  SkillRunner runner(request, w, perception, consent, config, std::move(observer), trace);
  while (runner.step()) {
  }
  return runner.outcome();
}

NseRunner::NseRunner(SkillRequest request, world::World& w, const SkillConfig& config)
    : request_(std::move(request)), w_(w), dt_(config.timing.dt) {
  check_request(request_, w_);
  out_.skill = request_.skill;
  const RunJitter j = draw_jitter(w_, config.timing);
  start_ = w_.now();
  if (request_.skill == Skill::CIN) {
    w_.robot().speed_factor = j.speed;
    w_.begin_navigation(request_.target);
  } else {
    const auto& st = w_.station(request_.target);
    w_.execute_manipulation(st.id, std::max(0.0, st.manipulation_duration + j.arm_offset));
  }
}

void NseRunner::finish() {
  done_ = true;
  out_.failure = w_.failure();
  out_.completed = !out_.failure;
  out_.workflow_failure = out_.failure.has_value();
  out_.duration = w_.now() - start_;
}

bool NseRunner::step() {
  if (done_) return false;
  const bool working = request_.skill == Skill::CIN ? w_.navigating() : w_.arm_busy();
  if (!working || w_.failure()) {
    finish();
    return false;
  }
  w_.step(dt_);
  return true;
}

SkillOutcome run_nse(const SkillRequest& request, world::World& w, const SkillConfig& config) {
  NseRunner r(request, w, config);
  while (r.step()) {
  }
  return r.outcome();
}

}  // namespace prevent::skills
