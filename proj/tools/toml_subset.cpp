#include "toml_subset.hpp"

#include <cctype>
#include <charconv>
#include <vector>

namespace sq::cli {

namespace {

class Reader {
 public:
  explicit Reader(const std::string& text) : s_(text) {}

  Json document() {
    Json root = Json::object();
    Json* table = &root;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        table = header(root);
      } else {
        key_value(*table);
      }
      end_of_line();
    }
    return root;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;

  bool eof() const { return pos_ >= s_.size(); }
  char peek(std::size_t ahead = 0) const { return pos_ + ahead < s_.size() ? s_[pos_ + ahead] : '\0'; }
  char get() {
    char c = s_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, col_); }

  void skip_spaces() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) get();
  }
  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') get();
  }
  void skip_blank_lines() {
    while (true) {
      skip_spaces();
      skip_comment();
      if (eof()) return;
      if (peek() == '\r') get();
      if (peek() != '\n') return;
      get();
    }
  }
  // Whitespace, comments and newlines, as allowed inside arrays.
  void skip_all() {
    while (true) {
      skip_spaces();
      skip_comment();
      if (!eof() && (peek() == '\n' || peek() == '\r')) {
        get();
        continue;
      }
      return;
    }
  }
  void end_of_line() {
    skip_spaces();
    skip_comment();
    if (peek() == '\r') get();
    if (eof()) return;
    if (peek() != '\n') fail(std::string("unexpected '") + peek() + "' after value");
    get();
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    get();
  }

  static bool bare(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

  std::string key_part() {
    skip_spaces();
    if (peek() == '"') return basic_string();
    if (peek() == '\'') return literal_string();
    std::string k;
    while (!eof() && bare(peek())) k += get();
    if (k.empty()) fail("expected a key");
    return k;
  }
  std::vector<std::string> dotted_key() {
    std::vector<std::string> parts{key_part()};
    skip_spaces();
    while (peek() == '.') {
      get();
      parts.push_back(key_part());
      skip_spaces();
    }
    return parts;
  }

  // Walks down `parts`, creating tables; the last element of an array of
  // tables stands for the array.
  Json* descend(Json* at, const std::vector<std::string>& parts, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      Json& next = (*at)[parts[i]];
      if (next.is_null()) next = Json::object();
      if (next.is_array() && !next.empty() && next.back().is_object()) {
        at = &next.back();
      } else if (next.is_object()) {
        at = &next;
      } else {
        fail("key '" + parts[i] + "' is not a table");
      }
    }
    return at;
  }

  Json* header(Json& root) {
    get();
    const bool array = peek() == '[';
    if (array) get();
    auto parts = dotted_key();
    expect(']');
    if (array) expect(']');
    Json* parent = descend(&root, parts, parts.size() - 1);
    Json& slot = (*parent)[parts.back()];
    if (array) {
      if (slot.is_null()) slot = Json::array();
      if (!slot.is_array()) fail("'" + parts.back() + "' is already a table");
      slot.push_back(Json::object());
      return &slot.back();
    }
    if (slot.is_null()) slot = Json::object();
    if (!slot.is_object()) fail("'" + parts.back() + "' is already a value");
    return &slot;
  }

  void key_value(Json& table) {
    const int line = line_, col = col_;
    auto parts = dotted_key();
    skip_spaces();
    expect('=');
    skip_spaces();
    Json* parent = descend(&table, parts, parts.size() - 1);
    if (parent->contains(parts.back())) throw ParseError("duplicate key '" + parts.back() + "'", line, col);
    (*parent)[parts.back()] = value();
  }

  Json value() {
    char c = peek();
    if (c == '"') return basic_string();
    if (c == '\'') return literal_string();
    if (c == '[') return array();
    if (c == '{') return inline_table();
    if (s_.compare(pos_, 4, "true") == 0 && !bare(peek(4))) {
      for (int i = 0; i < 4; ++i) get();
      return true;
    }
    if (s_.compare(pos_, 5, "false") == 0 && !bare(peek(5))) {
      for (int i = 0; i < 5; ++i) get();
      return false;
    }
    if (c == '+' || c == '-' || c == '.' || std::isdigit(static_cast<unsigned char>(c))) return number();
    if (eof() || c == '\n') fail("missing value");
    fail(std::string("unexpected '") + c + "'");
  }

  Json number() {
    std::string tok;
    while (!eof() && (bare(peek()) || peek() == '.' || peek() == '+'))
      if (peek() == '_')
        get();
      else
        tok += get();
    const bool is_float = tok.find_first_of(".eE") != std::string::npos || tok.find("inf") != std::string::npos ||
                          tok.find("nan") != std::string::npos;
    const char* first = tok.data() + (tok[0] == '+' ? 1 : 0);
    const char* last = tok.data() + tok.size();
    if (is_float) {
      double v = 0;
      auto [p, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || p != last) fail("invalid number '" + tok + "'");
      return v;
    }
    long long v = 0;
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || p != last) fail("invalid number '" + tok + "'");
    return v;
  }

  std::string basic_string() {
    get();
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      char c = get();
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      char e = eof() ? '\0' : get();
      switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail(std::string("unknown escape '\\") + e + "'");
      }
    }
  }

  std::string literal_string() {
    get();
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      char c = get();
      if (c == '\'') return out;
      out += c;
    }
  }

  Json array() {
    get();
    Json out = Json::array();
    while (true) {
      skip_all();
      if (peek() == ']') {
        get();
        return out;
      }
      out.push_back(value());
      skip_all();
      if (peek() == ',') {
        get();
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
  }

  Json inline_table() {
    get();
    Json out = Json::object();
    skip_spaces();
    if (peek() == '}') {
      get();
      return out;
    }
    while (true) {
      key_value(out);
      skip_spaces();
      if (peek() == '}') {
        get();
        return out;
      }
      expect(',');
      skip_spaces();
    }
  }
};

}  // namespace

Json parse_toml(const std::string& text) { return Reader(text).document(); }

}  // namespace sq::cli
