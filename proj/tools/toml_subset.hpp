#pragma once

#include <json.hpp>

#include <stdexcept>
#include <string>

namespace sq::cli {

using Json = nlohmann::ordered_json;

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, int line, int column)
      : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_, column_;
};

// The part of TOML the scenarios use: [tables], [[arrays of tables]], dotted
// keys, basic and literal strings, integers, floats, booleans, arrays
// (multi-line allowed) and inline tables. No dates, no multi-line strings.
Json parse_toml(const std::string& text);

}  // namespace sq::cli
