#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "prevent/bt/engine.hpp"
#include "prevent/common/action.hpp"
#include "prevent/dsl/dsl.hpp"
#include "prevent/sensors/sensors.hpp"
#include "prevent/world/world.hpp"

namespace prevent::skills {

enum class Skill { CIN, IBM };
enum class Mode { Skilled, NSE };

std::string_view to_string(Skill s);
std::string_view to_string(Mode m);
std::optional<Skill> skill_from_string(std::string_view s);
std::optional<Mode> mode_from_string(std::string_view s);

enum class ErrorCode { ScenarioLoadError, AbortRequested, InvalidRequest };

class SkillError : public std::runtime_error {
 public:
  SkillError(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Which detectors run and how they combine. The full configuration is
/// hierarchical: vision and VOC trigger, the classifier decides. Every other
/// configuration ORs its detectors and asks for consent on any trigger.
struct ModalityConfig {
  bool vision = true;
  bool voc = true;
  bool vlm = true;
  bool hierarchical = true;

  static ModalityConfig multi_modal() { return {}; }
  /// Names: vision, voc, vlm, vision+voc, vision+vlm, voc+vlm, multi.
  static std::optional<ModalityConfig> from_name(std::string_view name);
  std::string name() const;
};

struct Timing {
  double dt = 0.1;
  double cin_cycle = 0.35;     // effective monitoring cycle
  double cin_stall = 0.02675;  // command stall per cycle while monitoring
  double initial_voc = 4.0;
  double vision_burst = 1.0;
  int vision_frames = 3;
  double classify_look = 1.0;
  int classify_looks = 3;
  double mid_voc = 56.0;
  double vlm_cycle = 1.0;
  double vlm_latency = 1.0;
  double abort_timeout = 600.0;
  double speed_jitter = 0.005;    // relative std of robot speed per run
  double duration_jitter = 0.3;   // seconds std of arm operations per run
  double cin_classifier_range = 6.0;
  double ibm_clear_radius = 1.5;

  double cin_speed_factor() const { return cin_cycle / (cin_cycle + cin_stall); }
};

struct PerceptionModels {
  sensors::VisionBinaryModel nav_vision{0.967};
  sensors::VisionBinaryModel station_vision{0.96};
  sensors::ClassifierModel cin_classifier{sensors::ClassifierMode::FineTuned, 0.9041};
  sensors::ClassifierModel ibm_classifier{sensors::ClassifierMode::FineTuned, 0.9020};
  sensors::OlfactoryModel olfactory;
};

/// Table 1 accuracies for a task ("T1", "T2" or "T3") from the parameter file.
PerceptionModels models_for_task(const std::string& task,
                                 const std::map<std::string, double>& parameters);

struct SkillConfig {
  ModalityConfig modalities;
  Timing timing;
  PerceptionModels models;
  double t_safe = 2.5;
  const sensors::LabelSet* labels = &sensors::LabelSet::standard();
};

// ---- Perception ----

struct SampleRecord {
  enum class Kind { Vision, Voc, Classifier, Vlm, StationVision, MidVoc };
  Kind kind;
  double t;
  double value;  // x1, x2, or 1 for a safe label / 0 for unsafe
  std::string label;
};

std::string_view to_string(SampleRecord::Kind k);

/// Simulated sensing used by the leaves. Every sample is logged so traces can
/// show when the classifier was consulted relative to the triggers.
class Perception {
 public:
  Perception(SkillConfig config, std::uint64_t seed, bool deterministic);

  /// Navigation camera, 0.7 m ahead of the base.
  int nav_vision(const world::World& w);
  /// Burst at check_pose; positive if any frame is positive.
  int station_vision(const world::World& w, const world::Station& s);
  int voc(const world::World& w, world::Vec2 where, SampleRecord::Kind kind = SampleRecord::Kind::Voc);
  /// Secondary classifier against a known ground-truth label.
  sensors::LabelScore classify(const world::World& w, const std::string& truth, bool ibm);
  /// Several looks; returns the first look agreeing with the safe/unsafe majority.
  sensors::LabelScore vote(const world::World& w, const std::string& truth, bool ibm);
  /// Standalone language-model detector for navigation. Returns a result once
  /// its latency has elapsed.
  std::optional<sensors::LabelScore> vlm_nav(const world::World& w);
  sensors::LabelScore vlm_station(const world::World& w, const world::Station& s);

  /// Ground truth for the secondary classifier.
  std::string cin_truth(const world::World& w) const;
  std::string ibm_truth(const world::World& w, const world::Station& s) const;

  const std::vector<SampleRecord>& log() const { return log_; }
  bool deterministic() const { return deterministic_; }
  const SkillConfig& config() const { return config_; }
  sensors::Rng& rng() { return rng_; }

 private:
  std::string visible_truth(const world::World& w, const world::Region& r) const;

  SkillConfig config_;
  sensors::Rng rng_;
  bool deterministic_;
  std::optional<double> spurious_nav_at_;  // time of the single clear-scene error
  bool spurious_station_ = false;
  struct PendingVlm {
    double ready_at;
    sensors::LabelScore result;
  };
  std::deque<PendingVlm> vlm_queue_;
  double next_vlm_capture_ = 0.0;
  std::vector<SampleRecord> log_;
};

// ---- Consent ----

enum class ConsentCommand { Continue, Abort };

class ConsentSource {
 public:
  virtual ~ConsentSource() = default;
  /// Called every tick while a consent request is pending.
  virtual std::optional<ConsentCommand> poll(double now, double waiting_since) = 0;
};

/// Never answers; waits end at the abort timeout.
class NoConsent : public ConsentSource {
 public:
  std::optional<ConsentCommand> poll(double, double) override { return std::nullopt; }
};

/// Answers continue after a fixed delay, or a delay drawn from [lo, hi].
class AutoConsent : public ConsentSource {
 public:
  explicit AutoConsent(double delay) : lo_(delay), hi_(delay), rng_(0) {}
  AutoConsent(double lo, double hi, std::uint64_t seed) : lo_(lo), hi_(hi), rng_(seed) {}
  std::optional<ConsentCommand> poll(double now, double waiting_since) override;

 private:
  double lo_, hi_;
  std::mt19937_64 rng_;
  std::optional<double> current_delay_;
  double current_since_ = -1.0;
};

/// Thread-safe queue fed by an operator channel.
class QueuedConsent : public ConsentSource {
 public:
  void push(ConsentCommand c);
  std::optional<ConsentCommand> poll(double now, double waiting_since) override;

 private:
  std::mutex mu_;
  std::deque<ConsentCommand> queue_;
};

// ---- Outcomes ----

struct AlertPayload {
  std::optional<int> x1;
  int x2 = 0;
  std::optional<sensors::LabelScore> x3;
  std::optional<int> mid_voc;
  std::string scenario_id;
  world::Vec2 pose;
  std::uint64_t tick = 0;
  std::string summary;
  double timestamp = 0.0;
};

struct ConsentWait {
  double start = 0.0;
  double end = 0.0;
};

struct SkillOutcome {
  Skill skill = Skill::CIN;
  Action final_action = Action::Proceed;
  std::vector<Action> actions;  // one per halt episode
  int halts = 0;
  std::vector<AlertPayload> alerts;
  std::vector<ConsentWait> consent_waits;
  double duration = 0.0;
  bool completed = false;
  bool workflow_failure = false;
  std::optional<world::FailureMode> failure;
  bool timed_out = false;
};

/// Skill-level notifications, used by the orchestrator's event stream.
struct SkillEvent {
  enum class Kind { Halted, AlertRaised, ConsentReceived, Resumed, Classified };
  Kind kind;
  double t = 0.0;
  std::optional<AlertPayload> alert;
  std::optional<Action> action;
  std::string detail;
};

using SkillObserver = std::function<void(const SkillEvent&)>;

struct SkillRequest {
  Skill skill = Skill::CIN;
  std::string target;  // destination node for CIN, station id for IBM
  std::string scenario_id;
};

// ---- Trees ----

const std::string& cin_tree_text();
const std::string& ibm_tree_text();
dsl::TreeDocument build_cin_tree();
dsl::TreeDocument build_ibm_tree();
/// Registry with every leaf used by the shipped trees.
const bt::LeafRegistry& leaf_registry();

// ---- Execution ----

/// Ticks a skill tree against a stepping world. One call to step() is one
/// engine tick followed by one world step.
class SkillRunner {
 public:
  SkillRunner(SkillRequest request, world::World& w, Perception& perception,
              ConsentSource& consent, SkillConfig config, SkillObserver observer = {},
              bt::TraceLog* trace = nullptr);
  ~SkillRunner();
  SkillRunner(const SkillRunner&) = delete;
  SkillRunner& operator=(const SkillRunner&) = delete;

  /// Returns false once the skill has finished.
  bool step();
  bool done() const;
  const SkillOutcome& outcome() const;
  bool awaiting_consent() const;
  /// Ends the run as aborted at the next step.
  void request_abort();

  struct Runtime;

 private:
  std::unique_ptr<Runtime> rt_;
};

SkillOutcome run_skill(const SkillRequest& request, world::World& w, Perception& perception,
                       ConsentSource& consent, const SkillConfig& config,
                       SkillObserver observer = {}, bt::TraceLog* trace = nullptr);

/// Monitoring-free baseline: navigation or manipulation only, stepped like
/// SkillRunner.
class NseRunner {
 public:
  NseRunner(SkillRequest request, world::World& w, const SkillConfig& config);
  bool step();
  bool done() const { return done_; }
  const SkillOutcome& outcome() const { return out_; }

 private:
  void finish();

  SkillRequest request_;
  world::World& w_;
  double dt_;
  double start_;
  bool done_ = false;
  SkillOutcome out_;
};

SkillOutcome run_nse(const SkillRequest& request, world::World& w, const SkillConfig& config);

/// Per-run variation drawn from the world's stream before the first tick.
struct RunJitter {
  double speed = 1.0;       // multiplies the robot speed
  double arm_offset = 0.0;  // seconds added to each arm operation
};
RunJitter draw_jitter(world::World& w, const Timing& timing);

}  // namespace prevent::skills
