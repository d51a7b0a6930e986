#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "prevent/common/action.hpp"
#include "prevent/world/world.hpp"

namespace prevent::world {

inline constexpr const char* kScenarioFormat = "scenario 1";

struct TaskSpec {
  std::string type;      // NAV, LBR or combined_task
  std::string name;      // e.g. navigate, pickup_rack, place_rack
  std::string location;  // nav node or station id
};

struct ScenarioSpec {
  std::string id;
  std::string description;
  std::string skill;  // cin or ibm
  std::string start;  // robot start node
  TaskSpec task;
  Action expected_action = Action::Proceed;
  std::string nominal_label = "no_problem_detected";
  std::uint64_t seed = 0;
  std::vector<Hazard> hazards;
  Layout layout;
  /// Operator response window [lo, hi] seconds used by experiments, if set.
  std::optional<std::pair<double, double>> consent_delay;
};

/// Directory holding trees/, scenarios/, models/ and calibration/.
/// PREVENT_DATA_DIR overrides the build-time default.
std::filesystem::path data_dir();

Layout parse_layout(const std::string& json_text);
Layout load_layout(const std::filesystem::path& file);

/// `base_dir` resolves a relative "layout" reference.
ScenarioSpec parse_scenario(const std::string& json_text, const std::filesystem::path& base_dir);
ScenarioSpec load_scenario(const std::filesystem::path& file);
/// Looks up <data_dir>/scenarios/<id>.json; throws MissingScenario.
ScenarioSpec find_scenario(const std::string& id);
std::vector<std::string> list_scenarios();

/// Parses one hazard record (also the wire format for injections).
Hazard parse_hazard(const std::string& json_text, const Layout* layout = nullptr);

/// Least severe action a correct skill may take on this scenario's ground truth.
Action oracle_action(const std::vector<Hazard>& hazards);

World make_world(const ScenarioSpec& spec, std::uint64_t seed);

}  // namespace prevent::world
