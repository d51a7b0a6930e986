#include <algorithm>
#include <cctype>

#include "prevent/dsl/dsl.hpp"

namespace prevent::dsl {

namespace {

const std::vector<std::string> kNodeStart{"action", "condition", "fallback", "parallel",
                                          "sequence"};

enum class Tok { Ident, Number, LBrace, RBrace, LParen, RParen, Equals, Comma, End, Invalid };

struct Token {
  Tok kind = Tok::End;
  std::string_view text;
  Position begin;
  Position end;
};

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_'; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_'; }
bool digit(char c) { return c >= '0' && c <= '9'; }

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_blank();
    Token t;
    t.begin = pos_;
    if (i_ >= src_.size()) {
      t.kind = Tok::End;
      t.end = pos_;
      return t;
    }
    const std::size_t start = i_;
    const char c = src_[i_];
    if (c < 0 || c >= 0x7f) {
      // Non-ASCII bytes are never part of a valid token.
      t.kind = Tok::Invalid;
      advance();
    } else if (ident_start(static_cast<unsigned char>(c))) {
      t.kind = Tok::Ident;
      while (i_ < src_.size() && src_[i_] > 0 && ident_char(static_cast<unsigned char>(src_[i_])))
        advance();
    } else if (digit(c) || (c == '-' && i_ + 1 < src_.size() && digit(src_[i_ + 1]))) {
      t.kind = Tok::Number;
      advance();
      while (i_ < src_.size() && digit(src_[i_])) advance();
      if (i_ + 1 < src_.size() && src_[i_] == '.' && digit(src_[i_ + 1])) {
        advance();
        while (i_ < src_.size() && digit(src_[i_])) advance();
      }
    } else {
      switch (c) {
        case '{':
          t.kind = Tok::LBrace;
          break;
        case '}':
          t.kind = Tok::RBrace;
          break;
        case '(':
          t.kind = Tok::LParen;
          break;
        case ')':
          t.kind = Tok::RParen;
          break;
        case '=':
          t.kind = Tok::Equals;
          break;
        case ',':
          t.kind = Tok::Comma;
          break;
        default:
          t.kind = Tok::Invalid;
      }
      advance();
    }
    t.text = src_.substr(start, i_ - start);
    t.end = pos_;
    return t;
  }

 private:
  void advance() {
    if (src_[i_] == '\n') {
      ++pos_.line;
      pos_.col = 1;
    } else {
      ++pos_.col;
    }
    ++i_;
  }

  void skip_blank() {
    while (i_ < src_.size()) {
      char c = src_[i_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '#') {
        while (i_ < src_.size() && src_[i_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  std::size_t i_ = 0;
  Position pos_;
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::End:
      return "end of input";
    case Tok::Invalid: {
      auto b = static_cast<unsigned char>(t.text[0]);
      if (b >= 0x20 && b < 0x7f) return "unexpected character '" + std::string(t.text) + "'";
      static const char* hex = "0123456789abcdef";
      return std::string("unexpected byte 0x") + hex[b >> 4] + hex[b & 15];
    }
    default:
      return "unexpected '" + std::string(t.text) + "'";
  }
}

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) { tok_ = lex_.next(); }

  TreeDocument run(std::string_view src) {
    if (tok_.kind == Tok::End) throw_empty();
    read_header();
    if (tok_.kind == Tok::End) throw_empty();
    TreeDocument doc{std::string(src), parse_node(0, ""), {}, kFormatVersion};
    if (tok_.kind != Tok::End) {
      if (tok_.kind == Tok::Ident &&
          std::find(kNodeStart.begin(), kNodeStart.end(), tok_.text) != kNodeStart.end()) {
        throw ParseError(ErrorCode::DuplicateRootError, tok_.begin, {"end of input"},
                         "a document has exactly one root node");
      }
      fail({"end of input"});
    }
    doc.spans = std::move(spans_);
    return doc;
  }

 private:
  [[noreturn]] void throw_empty() {
    throw ParseError(ErrorCode::EmptyDocument, tok_.begin, kNodeStart, "document has no root node");
  }

  [[noreturn]] void fail(std::vector<std::string> expected, std::string what = {}) {
    if (what.empty()) what = describe(tok_);
    throw ParseError(ErrorCode::SyntaxError, tok_.begin, std::move(expected), what);
  }

  Token take() {
    Token t = tok_;
    last_end_ = t.end;
    tok_ = lex_.next();
    return t;
  }

  Token expect(Tok kind, const char* name) {
    if (tok_.kind != kind) fail({name});
    return take();
  }

  void read_header() {
    if (tok_.kind != Tok::Ident || tok_.text != "btdsl") fail({"btdsl"}, "missing 'btdsl 1' header");
    const std::size_t line = tok_.begin.line;
    take();
    if (tok_.kind != Tok::Number || tok_.begin.line != line) fail({"1"});
    if (tok_.text != "1") fail({"1"}, "unsupported format version " + std::string(tok_.text));
    take();
    if (tok_.kind != Tok::End && tok_.begin.line == line) fail({"end of line"});
  }

  bt::Params parse_attrs() {
    bt::Params params;
    take();  // '('
    while (true) {
      if (tok_.kind != Tok::Ident) fail({"attribute name"});
      Token key = take();
      if (params.count(key.text)) {
        throw ParseError(ErrorCode::SyntaxError, key.begin, {"attribute name"},
                         "duplicate attribute '" + std::string(key.text) + "'");
      }
      expect(Tok::Equals, "'='");
      if (tok_.kind != Tok::Ident && tok_.kind != Tok::Number) fail({"identifier", "number"});
      params.emplace(std::string(key.text), std::string(take().text));
      if (tok_.kind == Tok::Comma) {
        take();
        continue;
      }
      if (tok_.kind == Tok::RParen) {
        take();
        return params;
      }
      fail({"')'", "','"});
    }
  }

  std::string make_path(const std::string& parent, std::size_t index, const std::string& label) {
    if (parent.empty()) return "/" + label;
    return parent + "/" + std::to_string(index) + ":" + label;
  }

  bt::TreeNode parse_node(std::size_t depth, const std::string& parent, std::size_t index = 0) {
    if (tok_.kind != Tok::Ident) fail(kNodeStart);
    if (depth >= kMaxDepth) fail({}, "nesting deeper than " + std::to_string(kMaxDepth));
    auto kind = bt::node_kind_from_string(tok_.text);
    if (!kind) fail(kNodeStart);
    const Token head = take();
    Position end;

    if (!bt::is_composite(*kind)) {
      if (tok_.kind != Tok::Ident) fail({"leaf name"});
      Token name = take();
      bt::Params params;
      if (tok_.kind == Tok::LParen) params = parse_attrs();
      end = last_end_;
      std::string path = make_path(parent, index, std::string(name.text));
      spans_[path] = Span{head.begin, end};
      return bt::TreeNode(*kind, std::string(name.text), std::move(params), {});
    }

    bt::Params params;
    if (tok_.kind == Tok::LParen) params = parse_attrs();
    const std::string path = make_path(parent, index, std::string(head.text));
    expect(Tok::LBrace, "'{'");
    std::vector<bt::TreeNode> children;
    while (tok_.kind != Tok::RBrace) {
      children.push_back(parse_node(depth + 1, path, children.size()));
    }
    if (children.empty()) fail(kNodeStart, "composite node needs at least one child");
    end = take().end;
    spans_[path] = Span{head.begin, end};
    return bt::TreeNode(*kind, "", std::move(params), std::move(children));
  }

  Lexer lex_;
  Token tok_;
  Position last_end_;
  std::map<std::string, Span> spans_;
};

}  // namespace

ParseError::ParseError(ErrorCode code, Position where, std::vector<std::string> expected,
                       const std::string& message)
    : std::runtime_error(std::to_string(where.line) + ":" + std::to_string(where.col) + ": " +
                         message),
      code_(code),
      where_(where),
      expected_(std::move(expected)) {}

TreeDocument parse(std::string_view text) {
  Parser p(text);
  return p.run(text);
}

bool is_identifier(std::string_view text) {
  if (text.empty() || !ident_start(static_cast<unsigned char>(text[0])) || text[0] < 0) return false;
  return std::all_of(text.begin(), text.end(),
                     [](char c) { return c > 0 && ident_char(static_cast<unsigned char>(c)); });
}

bool is_value_token(std::string_view text) {
  if (is_identifier(text)) return true;
  std::size_t i = 0;
  if (i < text.size() && text[i] == '-') ++i;
  std::size_t digits = i;
  while (i < text.size() && digit(text[i])) ++i;
  if (i == digits) return false;
  if (i < text.size() && text[i] == '.') {
    std::size_t frac = ++i;
    while (i < text.size() && digit(text[i])) ++i;
    if (i == frac) return false;
  }
  return i == text.size();
}

}  // namespace prevent::dsl
