#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "prevent/orchestrator/orchestrator.hpp"

namespace prevent::harness {

std::uint64_t fnv1a(std::string_view bytes);
/// Stable per-cell seed from the experiment seed, a cell tag and a run index.
std::uint64_t cell_seed(std::uint64_t base, std::string_view tag, std::uint64_t index);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};
/// 95% Wilson score interval for k successes out of n.
Interval wilson(int k, int n);

struct ExperimentConfig {
  std::uint64_t seed = 1;
  int calibration_samples = 10'000;
  int runs_t1 = 30;      // physical trial counts per modality
  int runs_t2_t3 = 50;
  int nh_runs = 10;
  int oh_runs = 5;
  int lsh_runs = 5;
  std::pair<double, double> default_consent{60.0, 300.0};
  double fig7_consent = 5.0;
  /// Distance ahead of the robot at which a sudden spill appears in the
  /// navigation olfactory trials.
  std::pair<double, double> sudden_spill_distance{0.2, 0.8};
  skills::SkillConfig skill;

  nlohmann::json to_json() const;
};

/// Columns plus rows, written as CSV and as a JSON document.
struct Report {
  std::string experiment;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::vector<std::string> columns;
  std::vector<nlohmann::json> rows;
  nlohmann::json summary = nlohmann::json::object();

  std::string csv() const;
  nlohmann::json to_json() const;
};

void write_report(const Report& report, const std::filesystem::path& dir);

// ---- Fig. 7 ----

struct Fig7Cell {
  std::string scenario;
  std::string config;
  Action expected = Action::Proceed;
  Action action = Action::Proceed;
  bool workflow_failure = false;
  bool false_positive = false;
  bool false_negative = false;
};

struct Fig7Result {
  std::vector<Fig7Cell> cells;
  Report report;
  int fp(const std::string& config) const;
  int fn(const std::string& config) const;
  const Fig7Cell& cell(const std::string& scenario, const std::string& config) const;
};

inline const std::vector<std::string> kFig7Configs{"vision", "voc",        "vlm",  "vision+voc",
                                                   "vision+vlm", "voc+vlm", "multi"};
inline const std::vector<std::string> kFig7Scenarios{"S1", "S2", "S3", "S4", "S5", "S6"};

Fig7Result run_fig7(const ExperimentConfig& config);

// ---- Table 1 ----

struct Table1Cell {
  std::string task;      // T1, T2, T3
  std::string modality;  // resnet18_ft, vit_l14_zs, vit_l14_ft, olfactory
  double paper = 0.0;    // percent
  int n = 0;
  int correct = 0;
  Interval ci;
  int trial_n = 0;  // physical run count
  int trial_correct = 0;
  Interval trial_ci;

  double accuracy() const { return n ? 100.0 * correct / n : 0.0; }
  double trial_accuracy() const { return trial_n ? 100.0 * trial_correct / trial_n : 0.0; }
};

struct Table1Result {
  std::vector<Table1Cell> cells;
  Report report;
};

inline const std::vector<std::string> kTable1Modalities{"resnet18_ft", "vit_l14_zs", "vit_l14_ft",
                                                       "olfactory"};
/// Reference deployment accuracies in percent.
double table1_reference(const std::string& task, const std::string& modality);

Table1Result run_table1(const ExperimentConfig& config);

// ---- Table 2 ----

struct Table2Cell {
  std::string task;       // T1, T2, T3
  skills::Mode mode = skills::Mode::Skilled;
  std::string condition;  // NH, OH, LSH
  std::vector<double> durations;
  std::vector<bool> success;
  std::vector<std::optional<world::FailureMode>> failures;

  int runs() const { return static_cast<int>(durations.size()); }
  int successes() const;
  /// Over successful runs only.
  std::vector<double> completed_durations() const;
  double mean() const;
  double stddev() const;
};

struct Table2Result {
  std::vector<Table2Cell> cells;
  Report report;
  const Table2Cell& cell(const std::string& task, skills::Mode mode, const std::string& condition) const;
  /// Percent of all runs of (task, mode) that succeeded.
  double success_rate(const std::string& task, skills::Mode mode) const;
  /// Percent increase of the skilled nominal mean over the unmonitored one.
  double overhead(const std::string& task) const;
};

inline const std::vector<std::string> kTable2Tasks{"T1", "T2", "T3"};

Table2Result run_table2(const ExperimentConfig& config);

// ---- Single runs ----

struct SingleOptions {
  std::string scenario;
  std::optional<skills::Skill> skill;  // checked against the scenario when set
  skills::Mode mode = skills::Mode::Skilled;
  std::uint64_t seed = 1;
  std::optional<double> auto_consent;
  bool deterministic = false;
  std::string config = "multi";
};

struct SingleRun {
  orchestrator::RunRecord record;
  std::vector<orchestrator::Event> events;
  bt::TraceLog trace;
};

/// Modalities by name plus the perception accuracies of the scenario's task.
skills::SkillConfig skill_config_for(const world::ScenarioSpec& spec, const std::string& config);

/// Throws world::WorldError(MissingScenario) for an unknown id.
SingleRun run_single(const SingleOptions& options);
/// Writes trace.jsonl, events.jsonl and outcome.json.
void write_single(const SingleRun& run, const std::filesystem::path& dir);

}  // namespace prevent::harness
