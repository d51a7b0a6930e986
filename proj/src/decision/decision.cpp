#include "prevent/decision/decision.hpp"

namespace prevent::decision {

namespace {

void check_common(const DecisionInputs& in) {
  if (!(in.t_safe > 0.0)) throw DecisionError(ErrorCode::InvalidInput, "T_safe must be positive");
  if (in.x2 < 0) throw DecisionError(ErrorCode::InvalidInput, "x2 must be non-negative");
  if (in.x1 && *in.x1 != 0 && *in.x1 != 1) {
    throw DecisionError(ErrorCode::InvalidInput, "x1 must be 0 or 1");
  }
  if (in.x3 && !in.labels->contains(in.x3->label)) {
    throw DecisionError(ErrorCode::InvalidInput, "label '" + in.x3->label + "' is not in L");
  }
}

Action by_label(const DecisionInputs& in) {
  return in.labels->is_safe(in.x3->label) ? Action::HaltAutoResume : Action::HaltAwaitConsent;
}

}  // namespace

bool navigation_trigger(int x1, int x2, double t_safe) { return x1 == 1 || x2 > t_safe; }

bool initial_voc_ok(int x2, double t_safe) { return x2 < t_safe; }

Action decide_navigation(const DecisionInputs& in) {
  check_common(in);
  if (!in.x1) throw DecisionError(ErrorCode::InvalidInput, "navigation needs x1");
  const bool trigger = navigation_trigger(*in.x1, in.x2, in.t_safe);
  if (trigger && !in.x3) throw DecisionError(ErrorCode::MissingSecondary, "trigger without x3");
  if (!trigger && in.x3) throw DecisionError(ErrorCode::SpuriousSecondary, "x3 without trigger");
  return trigger ? by_label(in) : Action::Proceed;
}

Action decide_manipulation(const DecisionInputs& in, Phase phase) {
  check_common(in);
  if (phase == Phase::InitialVoc) {
    if (in.x1 || in.x3) {
      throw DecisionError(ErrorCode::PhaseViolation, "initial VOC check uses x2 only");
    }
    return initial_voc_ok(in.x2, in.t_safe) ? Action::Proceed : Action::HaltAwaitConsent;
  }
  if (!in.x1) throw DecisionError(ErrorCode::PhaseViolation, "post-vision check needs x1");
  if (*in.x1 == 1 && !in.x3) throw DecisionError(ErrorCode::MissingSecondary, "x1 = 1 without x3");
  if (*in.x1 == 0 && in.x3) throw DecisionError(ErrorCode::SpuriousSecondary, "x3 without x1 = 1");
  return *in.x1 == 1 ? by_label(in) : Action::Proceed;
}

}  // namespace prevent::decision
