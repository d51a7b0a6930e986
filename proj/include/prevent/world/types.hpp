#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace prevent::world {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
  Vec2 unit() const {
    double n = norm();
    return n > 0 ? Vec2{x / n, y / n} : Vec2{1.0, 0.0};
  }
  /// Rotated 90 degrees counter-clockwise.
  Vec2 left() const { return {-y, x}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

enum class Chemical { Acetone, Ethanol, Isopropanol };
enum class Containment { Sealed, Unsealed, Spilled };
enum class HazardKind {
  Spillage,
  Vial,
  ContaminatedGlove,
  BrokenGlass,
  Obstruction,
  UncappedVial,
  KnockedVial,
  Tool
};
enum class MotionState { Idle, Navigating, Halted };
enum class ArmState { Stowed, AtCheckPose, Manipulating };
enum class FailureMode { Collision, UnsafeManipulation, Abort };
enum class SlotState { CappedVial, UncappedVial, Missing, Knocked };
enum class TrayState { Clean, BrokenGlass, Spillage };

std::string_view to_string(Chemical c);
std::string_view to_string(Containment c);
std::string_view to_string(HazardKind k);
std::string_view to_string(MotionState m);
std::string_view to_string(ArmState a);
std::string_view to_string(FailureMode f);
std::string_view to_string(SlotState s);
std::string_view to_string(TrayState s);

std::optional<Chemical> chemical_from_string(std::string_view s);
std::optional<Containment> containment_from_string(std::string_view s);
std::optional<HazardKind> hazard_kind_from_string(std::string_view s);
std::optional<FailureMode> failure_mode_from_string(std::string_view s);
std::optional<SlotState> slot_state_from_string(std::string_view s);
std::optional<TrayState> tray_state_from_string(std::string_view s);

/// Kinds that always carry a chemical. Gloves may or may not.
constexpr bool requires_chemical(HazardKind k) {
  return k == HazardKind::Spillage || k == HazardKind::Vial || k == HazardKind::UncappedVial ||
         k == HazardKind::KnockedVial;
}
constexpr bool forbids_chemical(HazardKind k) {
  return k == HazardKind::BrokenGlass || k == HazardKind::Obstruction || k == HazardKind::Tool;
}

enum class ErrorCode {
  UnknownNode,
  UnreachableNode,
  UnknownStation,
  StateViolation,
  InvalidArgument,
  ScenarioLoadError,
  MissingScenario
};

class WorldError : public std::runtime_error {
 public:
  WorldError(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace prevent::world
