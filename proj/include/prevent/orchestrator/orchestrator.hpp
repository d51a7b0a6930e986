#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "prevent/skills/skills.hpp"
#include "prevent/world/scenario.hpp"

namespace prevent::orchestrator {

inline constexpr const char* kEventSchema = "prevent.events/1";

enum class ErrorCode { InvalidTask, ScenarioLoadError, NoPendingConsent, UnknownTask, UnknownSession };

class OrchestratorError : public std::runtime_error {
 public:
  OrchestratorError(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

std::string_view to_string(ErrorCode c);

enum class TaskType { NAV, LBR, Combined };
std::string_view to_string(TaskType t);
std::optional<TaskType> task_type_from_string(std::string_view s);

struct TaskMessage {
  TaskType type = TaskType::NAV;
  std::string name;
  std::string location;
  std::string robot_task_id;
  std::string user_id;
};

struct RunRecord {
  TaskMessage task;
  std::string scenario_id;
  skills::Mode mode = skills::Mode::Skilled;
  std::vector<skills::SkillOutcome> outcomes;  // CIN first for combined tasks
  double duration = 0.0;
  bool success = false;
  std::optional<world::FailureMode> failure;
};

/// Kinds: task_accepted, skill_started, halted, alert_raised,
/// consent_received, resumed, task_done, task_failed.
struct Event {
  std::uint64_t seq = 0;
  std::string kind;
  std::string robot_task_id;
  std::uint64_t tick = 0;
  double timestamp = 0.0;
  nlohmann::json payload = nlohmann::json::object();
};

nlohmann::json to_json(const Event& e);
nlohmann::json to_json(const RunRecord& r);
nlohmann::json to_json(const skills::SkillOutcome& o);
nlohmann::json to_json(const skills::AlertPayload& a);

/// The event-derived part of a session's state. Folding every event into an
/// empty view gives the same result as a snapshot followed by later events.
struct EventView {
  std::uint64_t last_seq = 0;
  std::map<std::string, nlohmann::json> pending_alerts;  // robot_task_id -> alert
  std::map<std::string, std::string> task_status;        // robot_task_id -> last kind
  nlohmann::json last_alert;
  friend bool operator==(const EventView&, const EventView&) = default;
};

void apply(EventView& view, const Event& e);

struct SessionOptions {
  skills::SkillConfig config;
  std::uint64_t seed = 1;
  bool deterministic = false;
  /// Answer consent automatically after a delay drawn from [lo, hi].
  std::optional<std::pair<double, double>> auto_consent;
};

/// One simulated lab with one robot. Commands may come from any thread; the
/// simulation advances only through step().
class Session {
 public:
  Session(std::string id, world::ScenarioSpec scenario, SessionOptions options);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const std::string& id() const { return id_; }
  const std::string& scenario_id() const { return scenario_.id; }
  const world::ScenarioSpec& scenario() const { return scenario_; }

  /// Throws InvalidTask for a bad message or while another task runs.
  void submit_task(const TaskMessage& msg, skills::Mode mode);
  /// Throws UnknownTask or NoPendingConsent.
  void deliver_consent(const std::string& robot_task_id, skills::ConsentCommand command,
                       const std::string& user_id);
  /// Adds a hazard at the next tick; appears_at counts from now.
  void inject(world::Hazard hazard);

  /// One tick. Returns false when no task is running.
  bool step();
  /// Steps until idle or until `max_ticks` have run.
  void run_until_idle(std::uint64_t max_ticks = 100'000'000);

  bool busy() const;
  std::optional<RunRecord> record(const std::string& robot_task_id) const;
  std::vector<RunRecord> records() const;

  std::vector<Event> events_since(std::uint64_t seq) const;
  /// Blocks up to `timeout` for events after `seq`.
  std::vector<Event> wait_events(std::uint64_t seq, std::chrono::milliseconds timeout) const;

  /// Live state for a late-joining client.
  nlohmann::json snapshot() const;
  EventView view() const;

  /// Deterministic replay support: the trace of the most recent skill run.
  const bt::TraceLog& trace() const { return trace_; }

 private:
  struct Active;
  void emit(std::string kind, const std::string& task_id, nlohmann::json payload);
  void start_skill(skills::Skill skill, const std::string& target);
  void finish_task();
  void on_skill_event(const skills::SkillEvent& e);

  std::string id_;
  world::ScenarioSpec scenario_;
  SessionOptions options_;
  world::World world_;

  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::vector<Event> events_;
  EventView view_;
  std::map<std::string, RunRecord> records_;
  std::vector<std::string> record_order_;
  std::unique_ptr<Active> active_;
  std::vector<world::Hazard> pending_injections_;
  std::uint64_t tick_ = 0;
  std::uint64_t task_counter_ = 0;
  bt::TraceLog trace_;
};

/// Session registry used by the gateway and the CLI.
class Orchestrator {
 public:
  explicit Orchestrator(SessionOptions defaults = {});

  /// Creates a session on the named scenario; throws ScenarioLoadError.
  std::shared_ptr<Session> create_session(const std::string& scenario_id,
                                          std::optional<SessionOptions> options = {});
  std::shared_ptr<Session> session(const std::string& id) const;
  std::vector<std::string> session_ids() const;

  /// Steps every busy session once; returns true if any did work.
  bool step_all();

 private:
  SessionOptions defaults_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t counter_ = 0;
};

/// Runs one task to completion on a fresh session; used by experiments.
RunRecord run_task(const world::ScenarioSpec& scenario, const TaskMessage& msg, skills::Mode mode,
                   const SessionOptions& options, std::vector<Event>* events = nullptr);

/// Task implied by a scenario file.
TaskMessage task_for(const world::ScenarioSpec& scenario, const std::string& robot_task_id = "task-1");

}  // namespace prevent::orchestrator
