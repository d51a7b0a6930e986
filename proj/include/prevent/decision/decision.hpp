#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "prevent/common/action.hpp"
#include "prevent/sensors/sensors.hpp"

namespace prevent::decision {

enum class ErrorCode { MissingSecondary, SpuriousSecondary, PhaseViolation, InvalidInput };

class DecisionError : public std::runtime_error {
 public:
  DecisionError(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct DecisionInputs {
  std::optional<int> x1;  // absent in the initial manipulation VOC check
  int x2 = 0;
  std::optional<sensors::LabelScore> x3;
  double t_safe = 2.5;
  const sensors::LabelSet* labels = &sensors::LabelSet::standard();
};

enum class Phase { InitialVoc, PostVision };

/// Navigation trigger: x1 = 1 or x2 > T_safe.
bool navigation_trigger(int x1, int x2, double t_safe);
/// Initial manipulation check passes only when x2 < T_safe.
bool initial_voc_ok(int x2, double t_safe);

Action decide_navigation(const DecisionInputs& in);
Action decide_manipulation(const DecisionInputs& in, Phase phase);

using prevent::severity_max;

}  // namespace prevent::decision
