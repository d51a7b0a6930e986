#pragma once

// Straight-line implementations of the two monitoring algorithms, written
// without the tree engine. They share the sensing and world code with the
// skills but make every control decision themselves.

#include "prevent/skills/skills.hpp"

namespace prevent::testing {

skills::SkillOutcome navigation_oracle(const skills::SkillRequest& req, world::World& w,
                                       skills::Perception& p, skills::ConsentSource& consent,
                                       const skills::SkillConfig& cfg);

skills::SkillOutcome manipulation_oracle(const skills::SkillRequest& req, world::World& w,
                                         skills::Perception& p, skills::ConsentSource& consent,
                                         const skills::SkillConfig& cfg);

inline skills::SkillOutcome algorithm_oracle(const skills::SkillRequest& req, world::World& w,
                                             skills::Perception& p, skills::ConsentSource& consent,
                                             const skills::SkillConfig& cfg) {
  return req.skill == skills::Skill::CIN ? navigation_oracle(req, w, p, consent, cfg)
                                         : manipulation_oracle(req, w, p, consent, cfg);
}

}  // namespace prevent::testing
