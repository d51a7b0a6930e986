#include "prevent/world/scenario.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

#ifndef PREVENT_DEFAULT_DATA_DIR
#define PREVENT_DEFAULT_DATA_DIR "data"
#endif

namespace prevent::world {

using nlohmann::json;

namespace {

[[noreturn]] void load_error(const std::string& msg) {
  throw WorldError(ErrorCode::ScenarioLoadError, msg);
}

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) load_error("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    load_error(std::string("invalid JSON: ") + e.what());
  }
}

Vec2 vec(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    load_error(std::string(what) + " must be [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

/// Offset given as (forward, left) in a frame with the given heading.
Vec2 in_frame(Vec2 origin, Vec2 heading, Vec2 offset) {
  Vec2 h = heading.unit();
  return origin + h * offset.x + h.left() * offset.y;
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    load_error(std::string("field '") + key + "' has the wrong type");
  }
}

Hazard hazard_from_json(const json& j, const Layout* layout) {
  if (!j.is_object()) load_error("hazard must be an object");
  Hazard h;
  h.id = get_or<std::string>(j, "id", "");
  auto kind = hazard_kind_from_string(get_or<std::string>(j, "kind", ""));
  if (!kind) load_error("hazard '" + h.id + "': unknown kind");
  h.kind = *kind;
  if (j.contains("chemical") && !j["chemical"].is_null()) {
    auto c = chemical_from_string(get_or<std::string>(j, "chemical", ""));
    if (!c) load_error("hazard '" + h.id + "': unknown chemical");
    h.chemical = *c;
  }
  if (requires_chemical(h.kind) && !h.chemical) {
    load_error("hazard '" + h.id + "': " + std::string(to_string(h.kind)) + " needs a chemical");
  }
  if (forbids_chemical(h.kind) && h.chemical) {
    load_error("hazard '" + h.id + "': " + std::string(to_string(h.kind)) +
               " cannot carry a chemical");
  }
  auto containment = containment_from_string(get_or<std::string>(j, "containment", "spilled"));
  if (!containment) load_error("hazard '" + h.id + "': unknown containment");
  h.containment = *containment;
  h.emission_scale = get_or<double>(j, "emission_scale", 1.0);
  if (!(h.emission_scale >= 0.0)) load_error("hazard '" + h.id + "': negative emission_scale");
  h.visible = get_or<bool>(j, "visible", true);
  h.appears_at = get_or<double>(j, "appears_at", 0.0);
  if (!(h.appears_at >= 0.0)) load_error("hazard '" + h.id + "': appears_at must be >= 0");
  h.on_path = get_or<bool>(j, "on_path", false);
  h.in_interaction_zone = get_or<bool>(j, "in_interaction_zone", false);
  if (!j.contains("unsafe")) load_error("hazard '" + h.id + "': unsafe flag is required");
  h.unsafe = get_or<bool>(j, "unsafe", false);
  h.label = get_or<std::string>(j, "label", "");
  h.station = get_or<std::string>(j, "station", "");

  if (j.contains("ahead_offset")) {
    h.ahead_offset = vec(j["ahead_offset"], "ahead_offset");
  } else if (j.contains("anchor")) {
    // "<station>.<frame>" with the position read as (forward, left) in the
    // station's parking heading.
    std::string anchor = get_or<std::string>(j, "anchor", "");
    auto dot = anchor.find('.');
    if (!layout || dot == std::string::npos) load_error("hazard '" + h.id + "': bad anchor");
    auto st = layout->stations.find(anchor.substr(0, dot));
    if (st == layout->stations.end()) load_error("hazard '" + h.id + "': unknown anchor station");
    const Station& s = st->second;
    std::string frame = anchor.substr(dot + 1);
    Vec2 origin;
    if (frame == "target") {
      origin = s.target;
    } else if (frame == "grasp") {
      origin = s.grasp;
    } else if (frame == "check_sensor") {
      origin = s.check_sensor;
    } else if (frame == "park") {
      origin = layout->graph.position(s.node);
    } else {
      load_error("hazard '" + h.id + "': unknown anchor frame '" + frame + "'");
    }
    Vec2 offset = j.contains("position") ? vec(j["position"], "position") : Vec2{};
    h.position = in_frame(origin, s.heading, offset);
    if (h.station.empty()) h.station = s.id;
  } else {
    if (!j.contains("position")) load_error("hazard '" + h.id + "': position is required");
    h.position = vec(j["position"], "position");
  }
  return h;
}

std::optional<Action> parse_action(const std::string& s) { return action_from_string(s); }

}  // namespace

std::filesystem::path data_dir() {
  if (const char* env = std::getenv("PREVENT_DATA_DIR"); env && *env) return env;
  return PREVENT_DEFAULT_DATA_DIR;
}

Layout parse_layout(const std::string& json_text) {
  json j = parse_json(json_text);
  if (get_or<std::string>(j, "format", "") != "layout 1") load_error("layout: expected format 'layout 1'");
  Layout l;
  l.base_speed = get_or<double>(j, "base_speed", 0.5);
  l.interaction_radius = get_or<double>(j, "interaction_radius", 0.3);
  l.inspection_radius = get_or<double>(j, "inspection_radius", 1.0);
  l.collision_radius = get_or<double>(j, "collision_radius", 0.2);
  if (!(l.base_speed > 0.0)) load_error("layout: base_speed must be positive");
  try {
    for (const auto& n : j.at("nodes")) {
      l.graph.add_node(n.at("id").get<std::string>(), vec(n.at("position"), "node position"));
    }
    for (const auto& e : j.at("edges")) {
      std::optional<double> len;
      if (e.size() == 3) len = e[2].get<double>();
      l.graph.add_edge(e.at(0).get<std::string>(), e.at(1).get<std::string>(), len);
    }
    for (const auto& s : j.at("stations")) {
      Station st;
      st.id = s.at("id").get<std::string>();
      st.node = s.at("node").get<std::string>();
      Vec2 park = l.graph.position(st.node);
      st.heading = vec(s.at("heading"), "heading").unit();
      st.target = in_frame(park, st.heading, vec(s.at("target"), "target"));
      st.check_sensor = in_frame(park, st.heading, vec(s.at("check_sensor"), "check_sensor"));
      st.grasp = in_frame(park, st.heading, vec(s.at("grasp"), "grasp"));
      st.move_check_duration = get_or<double>(s, "move_check_duration", 0.0);
      st.manipulation_duration = get_or<double>(s, "manipulation_duration", 0.0);
      if (s.contains("rack")) {
        for (const auto& slot : s["rack"]) {
          auto state = slot_state_from_string(slot.get<std::string>());
          if (!state) load_error("station '" + st.id + "': unknown slot state");
          st.rack.push_back(*state);
        }
      }
      if (st.id == "capping" && st.rack.size() != 8) {
        load_error("station 'capping' must have exactly 8 rack slots");
      }
      auto tray = tray_state_from_string(get_or<std::string>(s, "tray", "clean"));
      if (!tray) load_error("station '" + st.id + "': unknown tray state");
      st.tray = *tray;
      l.stations.emplace(st.id, std::move(st));
    }
  } catch (const json::exception& e) {
    load_error(std::string("layout: ") + e.what());
  } catch (const WorldError& e) {
    if (e.code() == ErrorCode::ScenarioLoadError) throw;
    load_error(std::string("layout: ") + e.what());
  }
  return l;
}

Layout load_layout(const std::filesystem::path& file) { return parse_layout(read_file(file)); }

Action oracle_action(const std::vector<Hazard>& hazards) {
  bool unsafe = std::any_of(hazards.begin(), hazards.end(), [](const Hazard& h) { return h.unsafe; });
  return unsafe ? Action::HaltAwaitConsent : Action::Proceed;
}

ScenarioSpec parse_scenario(const std::string& json_text, const std::filesystem::path& base_dir) {
  json j = parse_json(json_text);
  if (get_or<std::string>(j, "format", "") != kScenarioFormat) {
    load_error("expected format '" + std::string(kScenarioFormat) + "'");
  }
  ScenarioSpec s;
  s.id = get_or<std::string>(j, "id", "");
  if (s.id.empty()) load_error("scenario id is required");
  s.description = get_or<std::string>(j, "description", "");
  s.skill = get_or<std::string>(j, "skill", "");
  if (s.skill != "cin" && s.skill != "ibm") load_error(s.id + ": skill must be cin or ibm");
  s.start = get_or<std::string>(j, "start", "dock");
  s.seed = get_or<std::uint64_t>(j, "seed", 0);
  s.nominal_label = get_or<std::string>(j, "label", "no_problem_detected");

  std::string layout_ref = get_or<std::string>(j, "layout", "lab_layout.json");
  s.layout = load_layout(base_dir / layout_ref);
  if (!s.layout.graph.contains(s.start)) load_error(s.id + ": unknown start node");

  const json task = j.value("task", json::object());
  s.task.type = get_or<std::string>(task, "type", "");
  s.task.name = get_or<std::string>(task, "name", "");
  s.task.location = get_or<std::string>(task, "location", "");

  auto expected = parse_action(get_or<std::string>(j, "expected_action", ""));
  if (!expected) load_error(s.id + ": unknown expected_action");
  s.expected_action = *expected;

  if (j.contains("hazards")) {
    for (const auto& hj : j["hazards"]) {
      Hazard h = hazard_from_json(hj, &s.layout);
      if (h.label.empty()) h.label = s.nominal_label;
      if (h.id.empty()) h.id = "h" + std::to_string(s.hazards.size() + 1);
      s.hazards.push_back(std::move(h));
    }
  }
  if (j.contains("consent_delay")) {
    Vec2 d = vec(j["consent_delay"], "consent_delay");
    if (!(d.x >= 0.0 && d.y >= d.x)) load_error(s.id + ": consent_delay must be [lo, hi] with 0 <= lo <= hi");
    s.consent_delay = std::make_pair(d.x, d.y);
  }
  bool any_unsafe = oracle_action(s.hazards) == Action::HaltAwaitConsent;
  if (any_unsafe != (s.expected_action == Action::HaltAwaitConsent)) {
    load_error(s.id + ": expected_action " + std::string(to_string(s.expected_action)) +
               " is inconsistent with the hazards' unsafe flags");
  }
  if (s.hazards.empty() && s.expected_action != Action::Proceed) {
    load_error(s.id + ": a hazard-free scenario must expect proceed");
  }
  return s;
}

ScenarioSpec load_scenario(const std::filesystem::path& file) {
  return parse_scenario(read_file(file), file.parent_path());
}

ScenarioSpec find_scenario(const std::string& id) {
  auto file = data_dir() / "scenarios" / (id + ".json");
  if (!std::filesystem::exists(file)) {
    throw WorldError(ErrorCode::MissingScenario, "no scenario '" + id + "' in " +
                                                     (data_dir() / "scenarios").string());
  }
  return load_scenario(file);
}

std::vector<std::string> list_scenarios() {
  std::vector<std::string> ids;
  auto dir = data_dir() / "scenarios";
  if (!std::filesystem::exists(dir)) return ids;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() != ".json" || e.path().filename() == "lab_layout.json") continue;
    ids.push_back(e.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

Hazard parse_hazard(const std::string& json_text, const Layout* layout) {
  return hazard_from_json(parse_json(json_text), layout);
}

World make_world(const ScenarioSpec& spec, std::uint64_t seed) {
  World w(spec.layout, spec.start, seed);
  for (const auto& h : spec.hazards) w.add_hazard(h);
  return w;
}

}  // namespace prevent::world
