#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "prevent/bt/engine.hpp"

namespace prevent::dsl {

inline constexpr int kFormatVersion = 1;
inline constexpr std::size_t kMaxDepth = 128;

struct Position {
  std::size_t line = 1;  // 1-based
  std::size_t col = 1;   // 1-based, in bytes
  friend bool operator==(const Position&, const Position&) = default;
};

/// Half-open: `end` is one past the last byte of the node's text.
struct Span {
  Position begin;
  Position end;
  friend bool operator==(const Span&, const Span&) = default;
};

enum class ErrorCode { SyntaxError, EmptyDocument, DuplicateRootError };

class ParseError : public std::runtime_error {
 public:
  ParseError(ErrorCode code, Position where, std::vector<std::string> expected,
             const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  Position where() const noexcept { return where_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  ErrorCode code_;
  Position where_;
  std::vector<std::string> expected_;
};

struct TreeDocument {
  std::string source;
  bt::TreeNode root;
  std::map<std::string, Span> spans;  // keyed by node path
  int version = kFormatVersion;
};

/// Parses a .bt document. Throws ParseError.
TreeDocument parse(std::string_view text);

struct Diagnostic {
  std::string path;
  Span span;
  std::string message;
};

std::vector<Diagnostic> validate(const TreeDocument& doc, const bt::LeafRegistry& registry);
/// Same checks without spans; used for trees built in code.
std::vector<Diagnostic> validate(const bt::TreeNode& root, const bt::LeafRegistry& registry);

/// Canonical text, including the version header.
std::string serialize(const bt::TreeNode& root);

/// True if `text` is a valid attribute value token.
bool is_value_token(std::string_view text);
bool is_identifier(std::string_view text);

}  // namespace prevent::dsl
