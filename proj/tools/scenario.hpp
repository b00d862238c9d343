#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "toml_subset.hpp"
#include "sheafq/chain.hpp"

namespace sq::cli {

// Bad scenario content: unknown keys, unresolved references, wrong types.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunFlags {
  std::optional<unsigned> seed;
  std::optional<Field> field;
  double grid_scale = 1.0;
  std::string out_dir = "out";
  bool fail_fast = false;
};

struct CheckResult {
  int task = 0;
  std::string kind;
  std::string anchor;
  bool pass = false;
  std::string detail;
};

struct RunResult {
  std::string name;
  std::string certifies;
  std::vector<CheckResult> checks;
  std::vector<std::string> outputs;
  bool pass() const;
};

// TOML subset or JSON, chosen by the file extension.
Json load_scenario(const std::string& path);

// Runs every task in order and writes the outputs plus summary.json into
// flags.out_dir. A scenario without tasks writes nothing.
RunResult run_scenario(const Json& doc, const RunFlags& flags);

}  // namespace sq::cli
