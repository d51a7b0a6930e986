#include "prevent/skills/skills.hpp"
#include "skills_trees.hpp"

namespace prevent::skills {

namespace {

dsl::TreeDocument build(const std::string& text) {
  auto doc = dsl::parse(text);
  auto diags = dsl::validate(doc, leaf_registry());
  if (!diags.empty()) {
    throw SkillError(ErrorCode::InvalidRequest, "embedded tree is invalid: " + diags.front().message);
  }
  return doc;
}

}  // namespace

const std::string& cin_tree_text() {
  static const std::string text = embedded::kCinTree;
  return text;
}

const std::string& ibm_tree_text() {
  static const std::string text = embedded::kIbmTree;
  return text;
}

dsl::TreeDocument build_cin_tree() { return build(cin_tree_text()); }
dsl::TreeDocument build_ibm_tree() { return build(ibm_tree_text()); }

}  // namespace prevent::skills
