#include "prevent/harness/harness.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>

namespace prevent::harness {

using nlohmann::json;
namespace orch = prevent::orchestrator;

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

double round_to(double v, int digits) {
  const double k = std::pow(10.0, digits);
  return std::round(v * k) / k;
}

Report make_report(std::string id, const ExperimentConfig& cfg, std::vector<std::string> columns) {
  Report r;
  r.experiment = std::move(id);
  r.seed = cfg.seed;
  json digest_input = cfg.to_json();
  digest_input["experiment"] = r.experiment;
  r.config_digest = hex(fnv1a(digest_input.dump()));
  r.columns = std::move(columns);
  return r;
}

std::string action_name(Action a) { return std::string(to_string(a)); }

}  // namespace

std::uint64_t cell_seed(std::uint64_t base, std::string_view tag, std::uint64_t index) {
  return splitmix(splitmix(base ^ fnv1a(tag)) + index);
}

Interval wilson(int k, int n) {
  if (n <= 0) return {0.0, 0.0};
  const double z = 1.959963984540054;
  const double p = static_cast<double>(k) / n;
  const double denom = 1.0 + z * z / n;
  const double centre = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  return {100.0 * std::max(0.0, centre - half), 100.0 * std::min(1.0, centre + half)};
}

json ExperimentConfig::to_json() const {
  const auto& t = skill.timing;
  const auto& m = skill.models;
  return {{"seed", seed},
          {"calibration_samples", calibration_samples},
          {"runs_t1", runs_t1},
          {"runs_t2_t3", runs_t2_t3},
          {"nh_runs", nh_runs},
          {"oh_runs", oh_runs},
          {"lsh_runs", lsh_runs},
          {"default_consent", {default_consent.first, default_consent.second}},
          {"fig7_consent", fig7_consent},
          {"sudden_spill_distance", {sudden_spill_distance.first, sudden_spill_distance.second}},
          {"t_safe", skill.t_safe},
          {"timing",
           {t.dt, t.cin_cycle, t.cin_stall, t.initial_voc, t.vision_burst, t.vision_frames,
            t.classify_look, t.classify_looks, t.mid_voc, t.vlm_cycle, t.vlm_latency, t.abort_timeout,
            t.speed_jitter, t.duration_jitter, t.cin_classifier_range, t.ibm_clear_radius}},
          {"olfactory",
           {m.olfactory.base_emission, m.olfactory.containment, m.olfactory.noise_std,
            m.olfactory.latency}},
          {"parameters", sensors::load_default_model_parameters()}};
}

// ---- Report ----

std::string Report::csv() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) os << ",";
      const auto& v = row.contains(columns[i]) ? row.at(columns[i]) : json(nullptr);
      if (v.is_string()) {
        os << v.get<std::string>();
      } else if (!v.is_null()) {
        os << v.dump();
      }
    }
    os << "\n";
  }
  return os.str();
}

json Report::to_json() const {
  return {{"experiment", experiment}, {"seed", seed},  {"config_digest", config_digest},
          {"columns", columns},       {"rows", rows},  {"summary", summary}};
}

void write_report(const Report& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / (report.experiment + ".csv")) << report.csv();
  std::ofstream(dir / (report.experiment + ".json")) << report.to_json().dump(2) << "\n";
}

// ---- Fig. 7 ----

int Fig7Result::fp(const std::string& config) const {
  int n = 0;
  for (const auto& c : cells) n += c.config == config && c.false_positive;
  return n;
}

int Fig7Result::fn(const std::string& config) const {
  int n = 0;
  for (const auto& c : cells) n += c.config == config && c.false_negative;
  return n;
}

const Fig7Cell& Fig7Result::cell(const std::string& scenario, const std::string& config) const {
  for (const auto& c : cells) {
    if (c.scenario == scenario && c.config == config) return c;
  }
  throw std::out_of_range("no fig7 cell " + scenario + "/" + config);
}

Fig7Result run_fig7(const ExperimentConfig& cfg) {
  Fig7Result out;
  out.report = make_report("fig7", cfg, {"scenario", "config", "expected", "action", "workflow_failure",
                                         "false_positive", "false_negative"});
  for (const auto& sid : kFig7Scenarios) {
    const auto spec = world::find_scenario(sid);
    for (const auto& name : kFig7Configs) {
      orch::SessionOptions o;
      o.config = cfg.skill;
      o.config.modalities = *skills::ModalityConfig::from_name(name);
      o.deterministic = true;
      o.seed = spec.seed;
      o.auto_consent = std::pair{cfg.fig7_consent, cfg.fig7_consent};
      auto rec = orch::run_task(spec, orch::task_for(spec), skills::Mode::Skilled, o);
      Fig7Cell c;
      c.scenario = sid;
      c.config = name;
      c.expected = spec.expected_action;
      c.action = rec.outcomes.front().final_action;
      c.workflow_failure = !rec.success;
      c.false_positive = c.action == Action::HaltAwaitConsent && severity(c.expected) < severity(c.action);
      c.false_negative = c.expected == Action::HaltAwaitConsent &&
                         (c.action != Action::HaltAwaitConsent || c.workflow_failure);
      out.report.rows.push_back({{"scenario", sid},
                                 {"config", name},
                                 {"expected", action_name(c.expected)},
                                 {"action", action_name(c.action)},
                                 {"workflow_failure", c.workflow_failure},
                                 {"false_positive", c.false_positive},
                                 {"false_negative", c.false_negative}});
      out.cells.push_back(std::move(c));
    }
  }
  for (const auto& name : kFig7Configs) {
    out.report.summary[name] = {{"fp", out.fp(name)}, {"fn", out.fn(name)}};
  }
  return out;
}

// ---- Table 1 ----

double table1_reference(const std::string& task, const std::string& modality) {
  static const std::map<std::string, double> ref{
      {"T1/resnet18_ft", 96.7}, {"T1/vit_l14_zs", 63.0}, {"T1/vit_l14_ft", 90.41}, {"T1/olfactory", 88.0},
      {"T2/resnet18_ft", 96.0}, {"T2/vit_l14_zs", 40.0}, {"T2/vit_l14_ft", 90.20}, {"T2/olfactory", 90.0},
      {"T3/resnet18_ft", 92.0}, {"T3/vit_l14_zs", 48.0}, {"T3/vit_l14_ft", 98.0},  {"T3/olfactory", 90.0}};
  return ref.at(task + "/" + modality);
}

namespace {

/// One deployment trial of a modality; returns whether its call was right.
class TrialModel {
 public:
  TrialModel(const std::string& task, const std::string& modality, const ExperimentConfig& cfg,
             const std::map<std::string, double>& params)
      : task_(task), modality_(modality), cfg_(cfg) {
    if (modality == "resnet18_ft") {
      vision_.accuracy = params.at("table1.resnet18_ft." + task);
    } else if (modality != "olfactory") {
      classifier_.mode = modality == "vit_l14_zs" ? sensors::ClassifierMode::ZeroShot
                                                  : sensors::ClassifierMode::FineTuned;
      classifier_.accuracy = params.at("table1." + modality + "." + task);
    } else if (task != "T1") {
      spec_ = world::find_scenario(task + "_NH");
      station_ = spec_.task.location;
    } else {
      spec_ = world::find_scenario("T1_NH");
    }
  }

  bool trial(std::uint64_t seed, std::int64_t index) {
    sensors::Rng rng(seed);
    if (modality_ == "resnet18_ft") {
      const bool truth = index % 2 == 0;
      return (sensors::sample_vision_binary(truth, vision_, rng).x1 == 1) == truth;
    }
    if (modality_ != "olfactory") {
      const auto& labels = cfg_.skill.labels->labels();
      const auto& truth = labels[static_cast<std::size_t>(index) % labels.size()];
      return sensors::sample_classifier(truth, classifier_, *cfg_.skill.labels, rng).label == truth;
    }
    return task_ == "T1" ? sudden_spill(seed) : station_vial(rng);
  }

 private:
  // A vial at the inspection target, read from the check pose. Unsealed
  // acetone, ethanol or isopropanol is a hazard; a sealed vial is not.
  bool station_vial(sensors::Rng& rng) {
    const auto& st = spec_.layout.stations.at(station_);
    std::uniform_int_distribution<int> pick(0, 3);
    const int k = pick(rng);
    world::Hazard h;
    h.kind = world::HazardKind::UncappedVial;
    h.position = st.target;
    h.materialized = true;
    const bool hazard = k < 3;
    if (hazard) {
      h.chemical = static_cast<sensors::Chemical>(k);
      h.containment = sensors::Containment::Unsealed;
    } else {
      h.chemical = static_cast<sensors::Chemical>(pick(rng) % 3);
      h.containment = sensors::Containment::Sealed;
    }
    const auto& m = cfg_.skill.models.olfactory;
    const double expected = sensors::expected_voc(h, st.check_sensor, 1e9, m);
    const int x2 = sensors::noisy_reading(expected, m, rng);
    return (x2 > cfg_.skill.t_safe) == hazard;
  }

  // A spill appears on the path ahead of the navigating robot; the trial
  // succeeds if the VOC-only skill halts before reaching it.
  bool sudden_spill(std::uint64_t seed) {
    world::World w = world::make_world(spec_, seed);
    sensors::Rng rng(splitmix(seed));
    std::uniform_real_distribution<double> start(2.0, 8.0);
    std::uniform_real_distribution<double> ahead(cfg_.sudden_spill_distance.first,
                                                 cfg_.sudden_spill_distance.second);
    std::uniform_int_distribution<int> chem(0, 2);
    const double s0 = start(rng);
    const double d = ahead(rng);
    const auto c = static_cast<sensors::Chemical>(chem(rng));

    skills::SkillConfig sc = cfg_.skill;
    sc.modalities = *skills::ModalityConfig::from_name("voc");
    skills::Perception p(sc, splitmix(seed + 1), false);
    skills::NoConsent consent;
    skills::SkillRunner runner({skills::Skill::CIN, spec_.task.location, spec_.id}, w, p, consent, sc);
    bool injected = false;
    double give_up = 1e9;
    while (runner.step()) {
      if (!injected && w.robot().travelled >= s0) {
        world::Hazard h;
        h.id = "sudden";
        h.kind = world::HazardKind::Spillage;
        h.chemical = c;
        h.containment = sensors::Containment::Spilled;
        h.position = w.robot().position + w.robot().heading * d;
        h.appears_at = w.now();
        h.on_path = true;
        h.unsafe = true;
        h.label = "spillage";
        w.add_hazard(h);
        injected = true;
        give_up = w.now() + 30.0;
      }
      if (injected && w.robot().motion == world::MotionState::Halted) return true;
      if (w.failure() || w.now() > give_up) return false;
    }
    return false;
  }

  std::string task_, modality_;
  const ExperimentConfig& cfg_;
  sensors::VisionBinaryModel vision_;
  sensors::ClassifierModel classifier_;
  world::ScenarioSpec spec_;
  std::string station_;
};

}  // namespace

Table1Result run_table1(const ExperimentConfig& cfg) {
  Table1Result out;
  out.report = make_report("table1", cfg,
                           {"task", "modality", "paper", "n", "correct", "accuracy", "ci_lo", "ci_hi",
                            "trial_n", "trial_correct", "trial_accuracy", "trial_ci_lo", "trial_ci_hi"});
  const auto params = sensors::load_default_model_parameters();
  for (const auto& task : kTable2Tasks) {
    for (const auto& modality : kTable1Modalities) {
      TrialModel model(task, modality, cfg, params);
      Table1Cell c;
      c.task = task;
      c.modality = modality;
      c.paper = table1_reference(task, modality);
      c.n = cfg.calibration_samples;
      const std::string tag = "table1/" + task + "/" + modality;
      for (int i = 0; i < c.n; ++i) c.correct += model.trial(cell_seed(cfg.seed, tag, i), i);
      c.ci = wilson(c.correct, c.n);
      c.trial_n = task == "T1" ? cfg.runs_t1 : cfg.runs_t2_t3;
      for (int i = 0; i < c.trial_n; ++i) {
        c.trial_correct += model.trial(cell_seed(cfg.seed, tag + "/trials", i), i);
      }
      c.trial_ci = wilson(c.trial_correct, c.trial_n);
      out.report.rows.push_back({{"task", task},
                                 {"modality", modality},
                                 {"paper", c.paper},
                                 {"n", c.n},
                                 {"correct", c.correct},
                                 {"accuracy", round_to(c.accuracy(), 2)},
                                 {"ci_lo", round_to(c.ci.lo, 2)},
                                 {"ci_hi", round_to(c.ci.hi, 2)},
                                 {"trial_n", c.trial_n},
                                 {"trial_correct", c.trial_correct},
                                 {"trial_accuracy", round_to(c.trial_accuracy(), 2)},
                                 {"trial_ci_lo", round_to(c.trial_ci.lo, 2)},
                                 {"trial_ci_hi", round_to(c.trial_ci.hi, 2)}});
      out.cells.push_back(std::move(c));
    }
  }
  double worst = 0.0;
  for (const auto& c : out.cells) worst = std::max(worst, std::abs(c.accuracy() - c.paper));
  out.report.summary["max_abs_error_points"] = round_to(worst, 3);
  return out;
}

// ---- Table 2 ----

int Table2Cell::successes() const {
  int n = 0;
  for (bool s : success) n += s;
  return n;
}

std::vector<double> Table2Cell::completed_durations() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < durations.size(); ++i) {
    if (success[i]) out.push_back(durations[i]);
  }
  return out;
}

double Table2Cell::mean() const {
  const auto d = completed_durations();
  if (d.empty()) return 0.0;
  double s = 0.0;
  for (double x : d) s += x;
  return s / d.size();
}

double Table2Cell::stddev() const {
  const auto d = completed_durations();
  if (d.size() < 2) return 0.0;
  const double m = mean();
  double s = 0.0;
  for (double x : d) s += (x - m) * (x - m);
  return std::sqrt(s / (d.size() - 1));
}

const Table2Cell& Table2Result::cell(const std::string& task, skills::Mode mode,
                                     const std::string& condition) const {
  for (const auto& c : cells) {
    if (c.task == task && c.mode == mode && c.condition == condition) return c;
  }
  throw std::out_of_range("no table2 cell " + task + "/" + condition);
}

double Table2Result::success_rate(const std::string& task, skills::Mode mode) const {
  int runs = 0, ok = 0;
  for (const auto& c : cells) {
    if (c.task != task || c.mode != mode) continue;
    runs += c.runs();
    ok += c.successes();
  }
  return runs ? 100.0 * ok / runs : 0.0;
}

double Table2Result::overhead(const std::string& task) const {
  const double nse = cell(task, skills::Mode::NSE, "NH").mean();
  return nse > 0 ? 100.0 * (cell(task, skills::Mode::Skilled, "NH").mean() / nse - 1.0) : 0.0;
}

Table2Result run_table2(const ExperimentConfig& cfg) {
  Table2Result out;
  out.report = make_report("table2", cfg, {"task", "mode", "condition", "runs", "successes", "mean_s",
                                           "std_s", "failures"});
  const auto params = sensors::load_default_model_parameters();
  const std::vector<std::pair<std::string, int>> conditions{
      {"NH", cfg.nh_runs}, {"OH", cfg.oh_runs}, {"LSH", cfg.lsh_runs}};
  for (const auto& task : kTable2Tasks) {
    for (auto mode : {skills::Mode::Skilled, skills::Mode::NSE}) {
      for (const auto& [condition, runs] : conditions) {
        const auto spec = world::find_scenario(task + "_" + condition);
        Table2Cell c;
        c.task = task;
        c.mode = mode;
        c.condition = condition;
        for (int i = 0; i < runs; ++i) {
          orch::SessionOptions o;
          o.config = cfg.skill;
          o.config.models = skills::models_for_task(task, params);
          o.seed = cell_seed(cfg.seed, "table2/" + task + "/" + condition, i);
          o.auto_consent = spec.consent_delay.value_or(cfg.default_consent);
          auto rec = orch::run_task(spec, orch::task_for(spec), mode, o);
          c.durations.push_back(rec.duration);
          c.success.push_back(rec.success);
          c.failures.push_back(rec.failure);
        }
        json failures = json::object();
        for (const auto& f : c.failures) {
          if (f) failures[std::string(world::to_string(*f))] = failures.value(std::string(world::to_string(*f)), 0) + 1;
        }
        out.report.rows.push_back({{"task", task},
                                   {"mode", std::string(skills::to_string(mode))},
                                   {"condition", condition},
                                   {"runs", c.runs()},
                                   {"successes", c.successes()},
                                   {"mean_s", c.successes() ? json(round_to(c.mean(), 2)) : json("fail")},
                                   {"std_s", c.successes() ? json(round_to(c.stddev(), 2)) : json(nullptr)},
                                   {"failures", failures.empty() ? "" : failures.dump()}});
        out.cells.push_back(std::move(c));
      }
    }
  }
  for (const auto& task : kTable2Tasks) {
    out.report.summary[task] = {
        {"skilled_success_rate", round_to(out.success_rate(task, skills::Mode::Skilled), 2)},
        {"nse_success_rate", round_to(out.success_rate(task, skills::Mode::NSE), 2)},
        {"overhead_percent", round_to(out.overhead(task), 3)}};
  }
  return out;
}

// ---- Single runs ----

skills::SkillConfig skill_config_for(const world::ScenarioSpec& spec, const std::string& config) {
  auto modalities = skills::ModalityConfig::from_name(config);
  if (!modalities) {
    throw skills::SkillError(skills::ErrorCode::InvalidRequest, "unknown modality config " + config);
  }
  skills::SkillConfig out;
  out.modalities = *modalities;
  out.models = skills::models_for_task(spec.task.location == "chemspeed" ? "T3" : "T2",
                                       sensors::load_default_model_parameters());
  return out;
}

SingleRun run_single(const SingleOptions& options) {
  const auto spec = world::find_scenario(options.scenario);
  if (options.skill && std::string(skills::to_string(*options.skill)) != spec.skill) {
    throw skills::SkillError(skills::ErrorCode::InvalidRequest,
                             "scenario " + spec.id + " runs the " + spec.skill + " skill");
  }
  orch::SessionOptions o;
  o.config = skill_config_for(spec, options.config);
  o.seed = options.seed;
  o.deterministic = options.deterministic;
  if (options.auto_consent) o.auto_consent = std::pair{*options.auto_consent, *options.auto_consent};

  orch::Session s("run", spec, o);
  const auto msg = orch::task_for(spec, "run-1");
  s.submit_task(msg, options.mode);
  s.run_until_idle();
  return {*s.record(msg.robot_task_id), s.events_since(0), s.trace()};
}

void write_single(const SingleRun& run, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "trace.jsonl");
    run.trace.write_lines(os);
  }
  {
    std::ofstream os(dir / "events.jsonl");
    for (const auto& e : run.events) os << orch::to_json(e).dump() << "\n";
  }
  std::ofstream(dir / "outcome.json") << orch::to_json(run.record).dump(2) << "\n";
}

}  // namespace prevent::harness
