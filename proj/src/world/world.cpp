#include "prevent/world/world.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <queue>

namespace prevent::world {

namespace {

template <class E, std::size_t N>
std::optional<E> lookup(const std::array<std::pair<E, std::string_view>, N>& table,
                        std::string_view s) {
  for (const auto& [e, name] : table) {
    if (name == s) return e;
  }
  return std::nullopt;
}

template <class E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E e) {
  for (const auto& [v, name] : table) {
    if (v == e) return name;
  }
  return "unknown";
}

constexpr std::array<std::pair<Chemical, std::string_view>, 3> kChemicals{{
    {Chemical::Acetone, "acetone"},
    {Chemical::Ethanol, "ethanol"},
    {Chemical::Isopropanol, "isopropanol"},
}};
constexpr std::array<std::pair<Containment, std::string_view>, 3> kContainment{{
    {Containment::Sealed, "sealed"},
    {Containment::Unsealed, "unsealed"},
    {Containment::Spilled, "spilled"},
}};
constexpr std::array<std::pair<HazardKind, std::string_view>, 8> kKinds{{
    {HazardKind::Spillage, "spillage"},
    {HazardKind::Vial, "vial"},
    {HazardKind::ContaminatedGlove, "contaminated_glove"},
    {HazardKind::BrokenGlass, "broken_glass"},
    {HazardKind::Obstruction, "obstruction"},
    {HazardKind::UncappedVial, "uncapped_vial"},
    {HazardKind::KnockedVial, "knocked_vial"},
    {HazardKind::Tool, "tool"},
}};
constexpr std::array<std::pair<MotionState, std::string_view>, 3> kMotion{{
    {MotionState::Idle, "idle"},
    {MotionState::Navigating, "navigating"},
    {MotionState::Halted, "halted"},
}};
constexpr std::array<std::pair<ArmState, std::string_view>, 3> kArm{{
    {ArmState::Stowed, "stowed"},
    {ArmState::AtCheckPose, "at_check_pose"},
    {ArmState::Manipulating, "manipulating"},
}};
constexpr std::array<std::pair<FailureMode, std::string_view>, 3> kFailures{{
    {FailureMode::Collision, "collision"},
    {FailureMode::UnsafeManipulation, "unsafe_manipulation"},
    {FailureMode::Abort, "abort"},
}};
constexpr std::array<std::pair<SlotState, std::string_view>, 4> kSlots{{
    {SlotState::CappedVial, "capped_vial"},
    {SlotState::UncappedVial, "uncapped_vial"},
    {SlotState::Missing, "missing"},
    {SlotState::Knocked, "knocked"},
}};
constexpr std::array<std::pair<TrayState, std::string_view>, 3> kTrays{{
    {TrayState::Clean, "clean"},
    {TrayState::BrokenGlass, "broken_glass"},
    {TrayState::Spillage, "spillage"},
}};

}  // namespace

std::string_view to_string(Chemical c) { return name_of(kChemicals, c); }
std::string_view to_string(Containment c) { return name_of(kContainment, c); }
std::string_view to_string(HazardKind k) { return name_of(kKinds, k); }
std::string_view to_string(MotionState m) { return name_of(kMotion, m); }
std::string_view to_string(ArmState a) { return name_of(kArm, a); }
std::string_view to_string(FailureMode f) { return name_of(kFailures, f); }
std::string_view to_string(SlotState s) { return name_of(kSlots, s); }
std::string_view to_string(TrayState s) { return name_of(kTrays, s); }

std::optional<Chemical> chemical_from_string(std::string_view s) { return lookup(kChemicals, s); }
std::optional<Containment> containment_from_string(std::string_view s) {
  return lookup(kContainment, s);
}
std::optional<HazardKind> hazard_kind_from_string(std::string_view s) { return lookup(kKinds, s); }
std::optional<FailureMode> failure_mode_from_string(std::string_view s) {
  return lookup(kFailures, s);
}
std::optional<SlotState> slot_state_from_string(std::string_view s) { return lookup(kSlots, s); }
std::optional<TrayState> tray_state_from_string(std::string_view s) { return lookup(kTrays, s); }

// ---- NavGraph ----

void NavGraph::add_node(std::string id, Vec2 position) {
  if (contains(id)) throw WorldError(ErrorCode::InvalidArgument, "duplicate node '" + id + "'");
  index_[id] = nodes_.size();
  nodes_.push_back({std::move(id), position});
  adj_.emplace_back();
}

std::size_t NavGraph::require(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw WorldError(ErrorCode::UnknownNode, "unknown node '" + id + "'");
  return it->second;
}

void NavGraph::add_edge(const std::string& a, const std::string& b, std::optional<double> length) {
  std::size_t ia = require(a), ib = require(b);
  double len = length.value_or(distance(nodes_[ia].position, nodes_[ib].position));
  if (!(len >= 0.0)) throw WorldError(ErrorCode::InvalidArgument, "negative edge length");
  adj_[ia].push_back({ib, len});
  adj_[ib].push_back({ia, len});
}

Vec2 NavGraph::position(const std::string& id) const { return nodes_[require(id)].position; }

Route NavGraph::shortest_path(const std::string& from, const std::string& to) const {
  const std::size_t s = require(from), t = require(to);
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(nodes_.size(), inf);
  std::vector<std::size_t> prev(nodes_.size(), nodes_.size());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[s] = 0.0;
  pq.push({0.0, s});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    if (u == t) break;
    for (const auto& e : adj_[u]) {
      if (d + e.length < dist[e.to]) {
        dist[e.to] = d + e.length;
        prev[e.to] = u;
        pq.push({dist[e.to], e.to});
      }
    }
  }
  if (dist[t] == inf) {
    throw WorldError(ErrorCode::UnreachableNode, "node '" + to + "' unreachable from '" + from + "'");
  }
  Route r;
  r.length = dist[t];
  for (std::size_t v = t; v != nodes_.size(); v = prev[v]) {
    r.nodes.push_back(nodes_[v].id);
    if (v == s) break;
  }
  std::reverse(r.nodes.begin(), r.nodes.end());
  return r;
}

// ---- Region ----

Region Region::ahead(Vec2 from, Vec2 heading, double range, double half_width) {
  Region r;
  r.kind = Kind::Ahead;
  r.center = from;
  r.heading = heading.unit();
  r.radius = range;
  r.half_width = half_width;
  return r;
}

Region Region::circle(Vec2 center, double radius) {
  Region r;
  r.kind = Kind::Circle;
  r.center = center;
  r.radius = radius;
  return r;
}

bool Region::contains(Vec2 p) const {
  if (kind == Kind::Circle) return distance(p, center) <= radius + 1e-9;
  Vec2 d = p - center;
  double fwd = d.dot(heading);
  double lat = d.dot(heading.left());
  return fwd >= 0.0 && fwd <= radius + 1e-9 && std::abs(lat) <= half_width + 1e-9;
}

// ---- World ----

World::World(Layout layout, std::string start_node, std::uint64_t seed)
    : layout_(std::move(layout)), rng_(seed) {
  robot_.node = std::move(start_node);
  robot_.position = layout_.graph.position(robot_.node);
  if (const Station* s = current_station()) robot_.heading = s->heading.unit();
}

const Station& World::station(const std::string& id) const {
  auto it = layout_.stations.find(id);
  if (it == layout_.stations.end()) {
    throw WorldError(ErrorCode::UnknownStation, "unknown station '" + id + "'");
  }
  return it->second;
}

const Station* World::current_station() const {
  if (robot_.motion != MotionState::Idle) return nullptr;
  for (const auto& [id, s] : layout_.stations) {
    if (s.node == robot_.node) return &s;
  }
  return nullptr;
}

void World::add_hazard(Hazard h) {
  if (h.appears_at < 0) throw WorldError(ErrorCode::InvalidArgument, "appears_at must be >= 0");
  h.materialized = false;
  hazards_.push_back(std::move(h));
  materialize();
}

void World::materialize() {
  for (auto& h : hazards_) {
    if (h.materialized || h.appears_at > clock_ + 1e-9) continue;
    if (h.ahead_offset) {
      h.position = robot_.position + robot_.heading * h.ahead_offset->x +
                   robot_.heading.left() * h.ahead_offset->y;
    }
    h.materialized = true;
  }
}

void World::step(double dt) {
  if (!(dt > 0.0)) throw WorldError(ErrorCode::InvalidArgument, "step size must be positive");
  move(dt);
  clock_ += dt;
  if (robot_.busy_until > 0.0 && !arm_busy() && robot_.arm == ArmState::Manipulating) {
    robot_.arm = ArmState::Stowed;
  }
  materialize();
  check_collision();
}

void World::move(double dt) {
  if (robot_.motion != MotionState::Navigating) return;
  double budget = layout_.base_speed * robot_.speed_factor * dt;
  while (budget > 0.0 && robot_.segment < robot_.path.size()) {
    Vec2 target = robot_.path[robot_.segment];
    Vec2 d = target - robot_.position;
    double len = d.norm();
    if (len > 1e-12) robot_.heading = d.unit();
    if (len <= budget + 1e-9) {
      robot_.position = target;
      robot_.travelled += len;
      budget -= len;
      ++robot_.segment;
    } else {
      robot_.position = robot_.position + d.unit() * budget;
      robot_.travelled += budget;
      budget = 0.0;
    }
  }
  if (robot_.segment >= robot_.path.size()) {
    robot_.motion = MotionState::Idle;
    robot_.node = robot_.destination;
    robot_.path.clear();
    robot_.segment = 0;
    if (const Station* s = current_station()) robot_.heading = s->heading.unit();
  }
}

void World::check_collision() {
  if (failure_) return;
  for (const auto& h : hazards_) {
    if (h.active() && h.unsafe && distance(h.position, robot_.position) <= layout_.collision_radius) {
      fail(FailureMode::Collision);
      robot_.motion = MotionState::Idle;
      return;
    }
  }
}

void World::begin_navigation(const std::string& dest) {
  if (robot_.motion == MotionState::Navigating) {
    throw WorldError(ErrorCode::StateViolation, "robot is already navigating");
  }
  if (robot_.arm != ArmState::Stowed) {
    throw WorldError(ErrorCode::StateViolation, "arm must be stowed before navigating");
  }
  Route route = layout_.graph.shortest_path(robot_.node, dest);
  robot_.destination = dest;
  robot_.path.clear();
  for (std::size_t i = 1; i < route.nodes.size(); ++i) {
    robot_.path.push_back(layout_.graph.position(route.nodes[i]));
  }
  robot_.segment = 0;
  if (robot_.path.empty()) {
    robot_.motion = MotionState::Idle;
    robot_.node = dest;
    return;
  }
  robot_.motion = MotionState::Navigating;
  robot_.heading = (robot_.path.front() - robot_.position).unit();
}

void World::halt_robot() {
  if (robot_.motion != MotionState::Navigating) {
    throw WorldError(ErrorCode::StateViolation, "halt requires a navigating robot");
  }
  robot_.motion = MotionState::Halted;
}

void World::resume_robot() {
  if (robot_.motion != MotionState::Halted) {
    throw WorldError(ErrorCode::StateViolation, "resume requires a halted robot");
  }
  robot_.motion = MotionState::Navigating;
}

std::vector<const Hazard*> World::query(const Region& region, bool visible_only) const {
  std::vector<const Hazard*> out;
  for (const auto& h : hazards_) {
    if (!h.active() || (visible_only && !h.visible)) continue;
    if (region.contains(h.position)) out.push_back(&h);
  }
  return out;
}

Region World::ahead_region(double range, double half_width) const {
  return Region::ahead(robot_.position, robot_.heading, range, half_width);
}

Region World::interaction_zone(const Station& s) const {
  return Region::circle(s.grasp, layout_.interaction_radius);
}

Region World::inspection_zone(const Station& s) const {
  return Region::circle(s.target, layout_.inspection_radius);
}

void World::occupy_arm(double seconds) {
  robot_.busy_until = std::max(robot_.busy_until, clock_) + seconds;
}

void World::arm_move_to_check_pose(const std::string& station_id, double duration) {
  const Station& s = station(station_id);
  if (robot_.motion == MotionState::Navigating || robot_.node != s.node) {
    throw WorldError(ErrorCode::StateViolation, "robot is not parked at '" + station_id + "'");
  }
  robot_.arm = ArmState::AtCheckPose;
  occupy_arm(duration);
}

void World::arm_stow() {
  if (robot_.arm == ArmState::Manipulating) {
    throw WorldError(ErrorCode::StateViolation, "arm is manipulating");
  }
  robot_.arm = ArmState::Stowed;
}

ManipulationResult World::execute_manipulation(const std::string& station_id, double duration) {
  const Station& s = station(station_id);
  if (robot_.motion == MotionState::Navigating || robot_.node != s.node) {
    throw WorldError(ErrorCode::StateViolation, "robot is not parked at '" + station_id + "'");
  }
  if (robot_.arm == ArmState::Manipulating) {
    throw WorldError(ErrorCode::StateViolation, "manipulation already in progress");
  }
  const Region zone = interaction_zone(s);
  for (const auto& h : hazards_) {
    if (!h.active() || !h.unsafe) continue;
    bool in_zone = zone.contains(h.position) || (h.in_interaction_zone && h.station == station_id);
    if (in_zone) {
      fail(FailureMode::UnsafeManipulation);
      return {false, 0.0};
    }
  }
  robot_.arm = ArmState::Manipulating;
  occupy_arm(duration);
  return {true, duration};
}

std::size_t World::clear_hazards_near(Vec2 near, double radius) {
  std::size_t n = 0;
  for (auto& h : hazards_) {
    if (h.active() && h.unsafe && distance(h.position, near) <= radius) {
      h.cleared = true;
      ++n;
    }
  }
  return n;
}

void World::fail(FailureMode mode) {
  if (!failure_) failure_ = mode;
}

}  // namespace prevent::world
