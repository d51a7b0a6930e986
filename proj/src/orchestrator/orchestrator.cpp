#include "prevent/orchestrator/orchestrator.hpp"

#include <algorithm>

namespace prevent::orchestrator {

using nlohmann::json;

std::string_view to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidTask:
      return "InvalidTask";
    case ErrorCode::ScenarioLoadError:
      return "ScenarioLoadError";
    case ErrorCode::NoPendingConsent:
      return "NoPendingConsent";
    case ErrorCode::UnknownTask:
      return "UnknownTask";
    case ErrorCode::UnknownSession:
      return "UnknownSession";
  }
  return "InvalidTask";
}

std::string_view to_string(TaskType t) {
  switch (t) {
    case TaskType::NAV:
      return "NAV";
    case TaskType::LBR:
      return "LBR";
    case TaskType::Combined:
      return "combined_task";
  }
  return "NAV";
}

std::optional<TaskType> task_type_from_string(std::string_view s) {
  if (s == "NAV") return TaskType::NAV;
  if (s == "LBR") return TaskType::LBR;
  if (s == "combined_task") return TaskType::Combined;
  return std::nullopt;
}

// ---- JSON ----

namespace {

json vec(world::Vec2 v) { return json::array({v.x, v.y}); }

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

json label(const std::optional<sensors::LabelScore>& l) {
  if (!l) return nullptr;
  return {{"label", l->label}, {"score", l->score}};
}

}  // namespace

json to_json(const skills::AlertPayload& a) {
  return {{"x1", opt(a.x1)},
          {"x2", a.x2},
          {"x3", label(a.x3)},
          {"mid_voc", opt(a.mid_voc)},
          {"snapshot", {{"scenario_id", a.scenario_id}, {"pose", vec(a.pose)}, {"tick", a.tick}}},
          {"summary", a.summary},
          {"timestamp", a.timestamp}};
}

json to_json(const skills::SkillOutcome& o) {
  json actions = json::array();
  for (auto a : o.actions) actions.push_back(std::string(to_string(a)));
  json alerts = json::array();
  for (const auto& a : o.alerts) alerts.push_back(to_json(a));
  json waits = json::array();
  for (const auto& w : o.consent_waits) waits.push_back({w.start, w.end});
  return {{"skill", std::string(to_string(o.skill))},
          {"final_action", std::string(to_string(o.final_action))},
          {"actions", actions},
          {"halts", o.halts},
          {"alerts", alerts},
          {"consent_waits", waits},
          {"duration", o.duration},
          {"completed", o.completed},
          {"workflow_failure", o.workflow_failure},
          {"failure", o.failure ? json(std::string(world::to_string(*o.failure))) : json(nullptr)},
          {"timed_out", o.timed_out}};
}

json to_json(const RunRecord& r) {
  json outcomes = json::array();
  for (const auto& o : r.outcomes) outcomes.push_back(to_json(o));
  return {{"task",
           {{"task_type", std::string(to_string(r.task.type))},
            {"task_name", r.task.name},
            {"location", r.task.location},
            {"robot_task_id", r.task.robot_task_id},
            {"user_id", r.task.user_id}}},
          {"scenario_id", r.scenario_id},
          {"mode", std::string(skills::to_string(r.mode))},
          {"outcomes", outcomes},
          {"duration", r.duration},
          {"success", r.success},
          {"failure", r.failure ? json(std::string(world::to_string(*r.failure))) : json(nullptr)}};
}

json to_json(const Event& e) {
  return {{"schema", kEventSchema}, {"seq", e.seq},           {"kind", e.kind},
          {"robot_task_id", e.robot_task_id}, {"tick", e.tick}, {"timestamp", e.timestamp},
          {"payload", e.payload}};
}

void apply(EventView& view, const Event& e) {
  view.last_seq = e.seq;
  view.task_status[e.robot_task_id] = e.kind;
  if (e.kind == "alert_raised") {
    view.pending_alerts[e.robot_task_id] = e.payload;
    view.last_alert = e.payload;
  } else if (e.kind == "resumed" || e.kind == "task_failed" || e.kind == "task_done") {
    view.pending_alerts.erase(e.robot_task_id);
  }
}

// ---- Session ----

namespace {

/// Operator commands first; the automatic responder only when configured.
class SessionConsent : public skills::ConsentSource {
 public:
  SessionConsent(std::optional<std::pair<double, double>> auto_delay, std::uint64_t seed) {
    if (auto_delay) auto_.emplace(auto_delay->first, auto_delay->second, seed);
  }
  std::optional<skills::ConsentCommand> poll(double now, double since) override {
    if (auto c = queued.poll(now, since)) return c;
    if (auto_) return auto_->poll(now, since);
    return std::nullopt;
  }
  skills::QueuedConsent queued;

 private:
  std::optional<skills::AutoConsent> auto_;
};

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

bool is_identifier(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-' || c == '.';
  });
}

[[noreturn]] void invalid(const std::string& msg) { throw OrchestratorError(ErrorCode::InvalidTask, msg); }

}  // namespace

struct Session::Active {
  TaskMessage msg;
  skills::Mode mode;
  RunRecord rec;
  int phase = 0;
  std::unique_ptr<skills::Perception> perception;
  std::unique_ptr<SessionConsent> consent;
  std::unique_ptr<skills::SkillRunner> runner;
  std::unique_ptr<skills::NseRunner> nse;
  bool consent_pending = false;
  bool consent_claimed = false;
};

Session::Session(std::string id, world::ScenarioSpec scenario, SessionOptions options)
    : id_(std::move(id)), scenario_(std::move(scenario)), options_(std::move(options)),
      world_(world::make_world(scenario_, options_.seed)) {}

Session::~Session() = default;

void Session::emit(std::string kind, const std::string& task_id, json payload) {
  Event e;
  e.seq = events_.size() + 1;
  e.kind = std::move(kind);
  e.robot_task_id = task_id;
  e.tick = tick_;
  e.timestamp = world_.now();
  e.payload = std::move(payload);
  apply(view_, e);
  events_.push_back(std::move(e));
  cv_.notify_all();
}

void Session::submit_task(const TaskMessage& msg, skills::Mode mode) {
  std::lock_guard lock(mu_);
  if (active_) invalid("busy: task '" + active_->msg.robot_task_id + "' is running");
  if (!is_identifier(msg.robot_task_id)) invalid("robot_task_id must be a non-empty identifier");
  if (records_.count(msg.robot_task_id)) invalid("duplicate robot_task_id '" + msg.robot_task_id + "'");
  if (!is_identifier(msg.name)) invalid("task name must be a non-empty identifier");
  const auto& layout = world_.layout();
  switch (msg.type) {
    case TaskType::NAV:
      if (!layout.graph.contains(msg.location)) invalid("unknown nav node '" + msg.location + "'");
      break;
    case TaskType::LBR: {
      auto st = layout.stations.find(msg.location);
      if (st == layout.stations.end()) invalid("'" + msg.location + "' is not a station");
      if (world_.robot().node != st->second.node || world_.navigating()) {
        invalid("robot is not parked at '" + msg.location + "'");
      }
      break;
    }
    case TaskType::Combined:
      if (!layout.stations.count(msg.location)) invalid("'" + msg.location + "' is not a station");
      break;
  }
  if (world_.failure()) invalid("the world has already failed");

  active_ = std::make_unique<Active>();
  active_->msg = msg;
  active_->mode = mode;
  active_->rec.task = msg;
  active_->rec.scenario_id = scenario_.id;
  active_->rec.mode = mode;
  ++task_counter_;
  emit("task_accepted", msg.robot_task_id,
       {{"task_type", std::string(to_string(msg.type))},
        {"task_name", msg.name},
        {"location", msg.location},
        {"user_id", msg.user_id},
        {"mode", std::string(skills::to_string(mode))}});
  if (msg.type == TaskType::LBR) {
    start_skill(skills::Skill::IBM, msg.location);
  } else {
    std::string dest = msg.type == TaskType::NAV ? msg.location : layout.stations.at(msg.location).node;
    start_skill(skills::Skill::CIN, dest);
  }
}

void Session::start_skill(skills::Skill skill, const std::string& target) {
  auto& a = *active_;
  skills::SkillRequest req{skill, target, scenario_.id};
  const std::uint64_t seed = mix(options_.seed, task_counter_ * 2 + (skill == skills::Skill::IBM));
  a.runner.reset();
  a.nse.reset();
  if (a.mode == skills::Mode::NSE) {
    a.nse = std::make_unique<skills::NseRunner>(req, world_, options_.config);
  } else {
    a.perception = std::make_unique<skills::Perception>(options_.config, seed, options_.deterministic);
    a.consent = std::make_unique<SessionConsent>(options_.auto_consent, mix(seed, 7));
    trace_.clear();
    a.runner = std::make_unique<skills::SkillRunner>(
        req, world_, *a.perception, *a.consent, options_.config,
        [this](const skills::SkillEvent& e) { on_skill_event(e); }, &trace_);
  }
  emit("skill_started", a.msg.robot_task_id,
       {{"skill", std::string(skills::to_string(skill))}, {"target", target}});
}

void Session::on_skill_event(const skills::SkillEvent& e) {
  auto& a = *active_;
  const std::string& id = a.msg.robot_task_id;
  using K = skills::SkillEvent::Kind;
  switch (e.kind) {
    case K::Halted:
      emit("halted", id, {{"detail", e.detail}, {"pose", vec(world_.robot().position)}});
      break;
    case K::AlertRaised:
      a.consent_pending = true;
      a.consent_claimed = false;
      emit("alert_raised", id, to_json(*e.alert));
      break;
    case K::ConsentReceived:
      a.consent_pending = false;
      emit("consent_received", id, {{"command", e.detail}});
      break;
    case K::Resumed:
      emit("resumed", id,
           {{"detail", e.detail},
            {"action", e.action ? json(std::string(to_string(*e.action))) : json(nullptr)}});
      break;
    case K::Classified:
      break;
  }
}

void Session::deliver_consent(const std::string& robot_task_id, skills::ConsentCommand command,
                              const std::string& user_id) {
  std::lock_guard lock(mu_);
  const bool running = active_ && active_->msg.robot_task_id == robot_task_id;
  if (!running && !records_.count(robot_task_id)) {
    throw OrchestratorError(ErrorCode::UnknownTask, "unknown robot_task_id '" + robot_task_id + "'");
  }
  if (!running || !active_->consent_pending || active_->consent_claimed || !active_->consent) {
    throw OrchestratorError(ErrorCode::NoPendingConsent,
                            "no consent request pending for '" + robot_task_id + "'");
  }
  active_->consent_claimed = true;
  active_->consent->queued.push(command);
  (void)user_id;
}

void Session::inject(world::Hazard hazard) {
  std::lock_guard lock(mu_);
  pending_injections_.push_back(std::move(hazard));
}

bool Session::step() {
  std::lock_guard lock(mu_);
  for (auto& h : pending_injections_) {
    h.appears_at += world_.now();
    world_.add_hazard(std::move(h));
  }
  pending_injections_.clear();
  if (!active_) return false;
  ++tick_;
  auto& a = *active_;
  const bool more = a.runner ? a.runner->step() : a.nse->step();
  if (more) return true;
  const auto& out = a.runner ? a.runner->outcome() : a.nse->outcome();
  a.rec.outcomes.push_back(out);
  if (a.msg.type == TaskType::Combined && a.phase == 0 && out.completed) {
    a.phase = 1;
    start_skill(skills::Skill::IBM, a.msg.location);
    return true;
  }
  finish_task();
  return false;
}

void Session::finish_task() {
  auto& a = *active_;
  auto& rec = a.rec;
  rec.duration = 0.0;
  rec.success = true;
  for (const auto& o : rec.outcomes) {
    rec.duration += o.duration;
    rec.success = rec.success && o.completed;
    if (!rec.failure && o.failure) rec.failure = o.failure;
  }
  if (a.msg.type == TaskType::Combined && rec.outcomes.size() != 2) rec.success = false;
  const std::string id = a.msg.robot_task_id;
  if (rec.success) {
    emit("task_done", id, {{"duration", rec.duration}});
  } else {
    emit("task_failed", id,
         {{"duration", rec.duration},
          {"failure", rec.failure ? json(std::string(world::to_string(*rec.failure))) : json(nullptr)}});
  }
  records_[id] = std::move(rec);
  record_order_.push_back(id);
  active_.reset();
}

void Session::run_until_idle(std::uint64_t max_ticks) {
  for (std::uint64_t i = 0; i < max_ticks && step(); ++i) {
  }
}

bool Session::busy() const {
  std::lock_guard lock(mu_);
  return active_ != nullptr;
}

std::optional<RunRecord> Session::record(const std::string& robot_task_id) const {
  std::lock_guard lock(mu_);
  auto it = records_.find(robot_task_id);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

std::vector<RunRecord> Session::records() const {
  std::lock_guard lock(mu_);
  std::vector<RunRecord> out;
  for (const auto& id : record_order_) out.push_back(records_.at(id));
  return out;
}

std::vector<Event> Session::events_since(std::uint64_t seq) const {
  std::lock_guard lock(mu_);
  if (seq >= events_.size()) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(seq), events_.end()};
}

std::vector<Event> Session::wait_events(std::uint64_t seq, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return events_.size() > seq; });
  if (seq >= events_.size()) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(seq), events_.end()};
}

EventView Session::view() const {
  std::lock_guard lock(mu_);
  return view_;
}

json Session::snapshot() const {
  std::lock_guard lock(mu_);
  const auto& r = world_.robot();
  json frame = {{"x1", nullptr}, {"x2", nullptr}, {"x3", nullptr}};
  if (active_ && active_->perception) {
    for (const auto& s : active_->perception->log()) {
      using K = skills::SampleRecord::Kind;
      if (s.kind == K::Vision || s.kind == K::StationVision) frame["x1"] = static_cast<int>(s.value);
      if (s.kind == K::Voc || s.kind == K::MidVoc) frame["x2"] = static_cast<int>(s.value);
      if (s.kind == K::Classifier || s.kind == K::Vlm) frame["x3"] = s.label;
    }
  }
  json pending = json::object();
  for (const auto& [id, alert] : view_.pending_alerts) pending[id] = alert;
  json status = json::object();
  for (const auto& [id, kind] : view_.task_status) status[id] = kind;
  return {{"schema", kEventSchema},
          {"session_id", id_},
          {"scenario_id", scenario_.id},
          {"clock", world_.now()},
          {"tick", tick_},
          {"last_seq", view_.last_seq},
          {"busy", active_ != nullptr},
          {"active_task", active_ ? json(active_->msg.robot_task_id) : json(nullptr)},
          {"awaiting_consent", active_ && active_->consent_pending},
          {"robot",
           {{"position", vec(r.position)},
            {"heading", vec(r.heading)},
            {"node", r.node},
            {"motion", std::string(world::to_string(r.motion))},
            {"arm", std::string(world::to_string(r.arm))}}},
          {"pending_alerts", pending},
          {"task_status", status},
          {"last_alert", view_.last_alert},
          {"last_frame", frame}};
}

// ---- Orchestrator ----

Orchestrator::Orchestrator(SessionOptions defaults) : defaults_(std::move(defaults)) {}

std::shared_ptr<Session> Orchestrator::create_session(const std::string& scenario_id,
                                                      std::optional<SessionOptions> options) {
  world::ScenarioSpec spec;
  try {
    spec = world::find_scenario(scenario_id);
  } catch (const world::WorldError& e) {
    throw OrchestratorError(ErrorCode::ScenarioLoadError, e.what());
  }
  std::lock_guard lock(mu_);
  std::string id = "s" + std::to_string(++counter_);
  auto s = std::make_shared<Session>(id, std::move(spec), options.value_or(defaults_));
  sessions_[id] = s;
  return s;
}

std::shared_ptr<Session> Orchestrator::session(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) {
    throw OrchestratorError(ErrorCode::UnknownSession, "unknown session '" + id + "'");
  }
  return it->second;
}

std::vector<std::string> Orchestrator::session_ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> ids;
  for (const auto& [id, s] : sessions_) ids.push_back(id);
  return ids;
}

bool Orchestrator::step_all() {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, s] : sessions_) all.push_back(s);
  }
  bool any = false;
  for (auto& s : all) any = s->step() || any;
  return any;
}

RunRecord run_task(const world::ScenarioSpec& scenario, const TaskMessage& msg, skills::Mode mode,
                   const SessionOptions& options, std::vector<Event>* events) {
  Session s("run", scenario, options);
  s.submit_task(msg, mode);
  s.run_until_idle();
  if (events) *events = s.events_since(0);
  return *s.record(msg.robot_task_id);
}

TaskMessage task_for(const world::ScenarioSpec& scenario, const std::string& robot_task_id) {
  TaskMessage m;
  auto type = task_type_from_string(scenario.task.type);
  m.type = type.value_or(scenario.skill == "cin" ? TaskType::NAV : TaskType::LBR);
  m.name = scenario.task.name.empty() ? "task" : scenario.task.name;
  m.location = scenario.task.location;
  m.robot_task_id = robot_task_id;
  m.user_id = "experiment";
  return m;
}

}  // namespace prevent::orchestrator
