#include <functional>

#include "prevent/dsl/dsl.hpp"

namespace prevent::dsl {

namespace {

using Visit = std::function<void(const bt::TreeNode&, const std::string&)>;

void walk(const bt::TreeNode& n, const std::string& path, const Visit& fn) {
  fn(n, path);
  for (std::size_t i = 0; i < n.children().size(); ++i) {
    walk(n.children()[i], bt::child_path(path, i, n.children()[i]), fn);
  }
}

std::vector<Diagnostic> check(const bt::TreeNode& root, const bt::LeafRegistry& registry,
                              const std::map<std::string, Span>* spans) {
  std::vector<Diagnostic> out;
  walk(root, bt::root_path(root), [&](const bt::TreeNode& n, const std::string& path) {
    Span span;
    if (spans) {
      if (auto it = spans->find(path); it != spans->end()) span = it->second;
    }
    auto report = [&](std::string msg) { out.push_back({path, span, std::move(msg)}); };

    if (!bt::is_composite(n.kind())) {
      const bt::LeafBinding* binding = registry.find(n.leaf_name());
      if (!binding) {
        report("unbound leaf '" + n.leaf_name() + "'");
        return;
      }
      for (const auto& [key, _] : n.params()) {
        if (!binding->params.count(key)) {
          report("unknown attribute '" + key + "' for leaf '" + n.leaf_name() + "'");
        }
      }
      return;
    }

    const bool parallel = n.kind() == bt::NodeKind::Parallel;
    for (const auto& [key, value] : n.params()) {
      if (!parallel && key == "memory") {
        if (!bt::parse_flag(value)) report("memory must be true or false");
      } else if (parallel && key == "success") {
        auto threshold = bt::parse_success_threshold(value);
        if (!threshold) {
          report("threshold must be positive or all");
        } else if (threshold->count && *threshold->count > n.children().size()) {
          report("threshold " + value + " exceeds child count " +
                 std::to_string(n.children().size()));
        }
      } else {
        report("unknown attribute '" + key + "' for " + std::string(bt::to_string(n.kind())));
      }
    }
  });
  return out;
}

void write_attrs(std::string& out, const bt::Params& params) {
  if (params.empty()) return;
  out += '(';
  bool first = true;
  for (const auto& [key, value] : params) {
    if (!first) out += ", ";
    first = false;
    out += key;
    out += '=';
    out += value;
  }
  out += ')';
}

void write_node(std::string& out, const bt::TreeNode& n, std::size_t indent) {
  out.append(indent * 2, ' ');
  out += bt::to_string(n.kind());
  if (!bt::is_composite(n.kind())) {
    out += ' ';
    out += n.leaf_name();
    write_attrs(out, n.params());
    out += '\n';
    return;
  }
  write_attrs(out, n.params());
  out += " {\n";
  for (const auto& c : n.children()) write_node(out, c, indent + 1);
  out.append(indent * 2, ' ');
  out += "}\n";
}

}  // namespace

std::vector<Diagnostic> validate(const TreeDocument& doc, const bt::LeafRegistry& registry) {
  return check(doc.root, registry, &doc.spans);
}

std::vector<Diagnostic> validate(const bt::TreeNode& root, const bt::LeafRegistry& registry) {
  return check(root, registry, nullptr);
}

std::string serialize(const bt::TreeNode& root) {
  std::string out = "btdsl " + std::to_string(kFormatVersion) + "\n";
  write_node(out, root, 0);
  return out;
}

}  // namespace prevent::dsl
