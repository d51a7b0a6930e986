#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "prevent/world/types.hpp"

namespace prevent::world {

struct Hazard {
  std::string id;
  HazardKind kind = HazardKind::Spillage;
  Vec2 position;
  std::optional<Chemical> chemical;
  Containment containment = Containment::Spilled;
  double emission_scale = 1.0;  // source strength relative to the chemical's base emission
  bool visible = true;
  double appears_at = 0.0;
  bool on_path = false;
  bool in_interaction_zone = false;
  bool unsafe = false;
  std::string label;  // ground-truth class for the classifier
  std::string station;  // station the hazard belongs to, if any
  /// Injections placed relative to the robot when they appear: (forward, left).
  std::optional<Vec2> ahead_offset;
  bool materialized = false;
  bool cleared = false;

  bool active() const { return materialized && !cleared; }
};

struct NavNode {
  std::string id;
  Vec2 position;
};

struct Route {
  std::vector<std::string> nodes;
  double length = 0.0;
};

class NavGraph {
 public:
  void add_node(std::string id, Vec2 position);
  /// Length defaults to the straight-line distance.
  void add_edge(const std::string& a, const std::string& b, std::optional<double> length = {});

  bool contains(const std::string& id) const { return index_.count(id) != 0; }
  Vec2 position(const std::string& id) const;
  const std::vector<NavNode>& nodes() const { return nodes_; }

  /// Dijkstra over edge lengths. Throws UnknownNode or UnreachableNode.
  Route shortest_path(const std::string& from, const std::string& to) const;

 private:
  struct Edge {
    std::size_t to;
    double length;
  };
  std::size_t require(const std::string& id) const;

  std::vector<NavNode> nodes_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::vector<Edge>> adj_;
};

struct Station {
  std::string id;
  std::string node;  // nav node where the robot parks
  Vec2 heading{1.0, 0.0};  // robot heading when parked
  Vec2 target;       // rack or tray centre
  Vec2 check_sensor; // sensor position with the arm at check_pose
  Vec2 grasp;        // grasp frame
  std::vector<SlotState> rack;  // 8 slots at the capping station
  TrayState tray = TrayState::Clean;
  double move_check_duration = 0.0;
  double manipulation_duration = 0.0;
};

struct Layout {
  NavGraph graph;
  std::map<std::string, Station> stations;
  double base_speed = 0.5;
  double interaction_radius = 0.3;
  double inspection_radius = 1.0;
  double collision_radius = 0.2;
};

struct Robot {
  Vec2 position;
  Vec2 heading{1.0, 0.0};
  std::string node;  // last node reached
  MotionState motion = MotionState::Idle;
  ArmState arm = ArmState::Stowed;
  std::string destination;
  std::vector<Vec2> path;
  std::size_t segment = 0;  // index of the waypoint being approached
  double travelled = 0.0;
  double speed_factor = 1.0;
  double busy_until = 0.0;
};

/// Region used by ground-truth queries.
struct Region {
  enum class Kind { Ahead, Circle } kind = Kind::Circle;
  Vec2 center;
  double radius = 0.0;      // Circle radius or Ahead range
  double half_width = 0.0;  // Ahead only
  Vec2 heading{1.0, 0.0};   // Ahead only

  static Region ahead(Vec2 from, Vec2 heading, double range, double half_width);
  static Region circle(Vec2 center, double radius);
  bool contains(Vec2 p) const;
};

struct ManipulationResult {
  bool ok = false;
  double duration = 0.0;
};

class World {
 public:
  World(Layout layout, std::string start_node, std::uint64_t seed = 0);

  double now() const { return clock_; }
  const Layout& layout() const { return layout_; }
  const Robot& robot() const { return robot_; }
  Robot& robot() { return robot_; }
  const std::vector<Hazard>& hazards() const { return hazards_; }
  std::vector<Hazard>& hazards() { return hazards_; }
  const Station& station(const std::string& id) const;
  /// Station whose parking node is the robot's current node, if idle there.
  const Station* current_station() const;

  void add_hazard(Hazard h);

  /// Advances the clock, moves a navigating robot and materializes injections.
  void step(double dt);

  void begin_navigation(const std::string& dest);
  void halt_robot();
  void resume_robot();
  bool navigating() const { return robot_.motion == MotionState::Navigating; }

  /// Hazards that have appeared, are not cleared, and fall in `region`.
  /// With `visible_only`, hazards hidden from cameras are skipped.
  std::vector<const Hazard*> query(const Region& region, bool visible_only = true) const;
  Region ahead_region(double range, double half_width) const;
  Region interaction_zone(const Station& s) const;
  Region inspection_zone(const Station& s) const;

  bool arm_busy() const { return clock_ < robot_.busy_until - 1e-9; }
  /// Keeps the arm occupied for `seconds` from now.
  void occupy_arm(double seconds);
  void arm_move_to_check_pose(const std::string& station_id, double duration);
  void arm_stow();
  /// Starts the manipulation; records UnsafeManipulation when an unsafe hazard
  /// sits in the interaction zone.
  ManipulationResult execute_manipulation(const std::string& station_id, double duration);

  /// Clears unsafe hazards within `radius` of `near`; returns how many.
  std::size_t clear_hazards_near(Vec2 near, double radius);

  std::optional<FailureMode> failure() const { return failure_; }
  void fail(FailureMode mode);

  std::mt19937_64& rng() { return rng_; }

 private:
  void materialize();
  void move(double dt);
  void check_collision();

  Layout layout_;
  Robot robot_;
  std::vector<Hazard> hazards_;
  double clock_ = 0.0;
  std::optional<FailureMode> failure_;
  std::mt19937_64 rng_;
};

}  // namespace prevent::world
