#pragma once

#include <optional>
#include <string_view>

namespace prevent {

/// Three-way safety decision. Declaration order is the severity order.
enum class Action {
  Proceed = 0,           // a1
  HaltAutoResume = 1,    // a2: halt, resume after a secondary check
  HaltAwaitConsent = 2,  // a3: halt until a human says continue
};

constexpr int severity(Action a) { return static_cast<int>(a); }

constexpr Action severity_max(Action a, Action b) { return severity(a) >= severity(b) ? a : b; }

constexpr std::string_view to_string(Action a) {
  switch (a) {
    case Action::Proceed:
      return "proceed";
    case Action::HaltAutoResume:
      return "halt_auto_resume";
    case Action::HaltAwaitConsent:
      return "halt_await_consent";
  }
  return "proceed";
}

constexpr std::optional<Action> action_from_string(std::string_view s) {
  if (s == "proceed" || s == "a1") return Action::Proceed;
  if (s == "halt_auto_resume" || s == "a2") return Action::HaltAutoResume;
  if (s == "halt_await_consent" || s == "a3") return Action::HaltAwaitConsent;
  return std::nullopt;
}

}  // namespace prevent
