#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <filesystem>
#include <iostream>

#include "criteria.hpp"
#include "scenario.hpp"

namespace fs = std::filesystem;
using namespace sq::cli;

namespace {

#ifndef SHEAFQ_SCENARIO_DIR
#define SHEAFQ_SCENARIO_DIR "scenarios"
#endif

std::vector<fs::path> scenario_files(const std::string& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".toml" || ext == ".json")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Scenario names without a path resolve against the bundled directory.
std::string resolve(const std::string& name, const std::string& dir) {
  if (fs::exists(name)) return name;
  for (const char* ext : {"", ".toml", ".json"}) {
    fs::path p = fs::path(dir) / (name + ext);
    if (fs::exists(p)) return p.string();
  }
  return name;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sheaf quantization of branes: scenario runner and acceptance suite"};
  app.require_subcommand(1);

  RunFlags flags;
  unsigned seed = 1;
  std::string field, dir = SHEAFQ_SCENARIO_DIR, scenario;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "random seed (overrides the scenario)");
    sub->add_option("--field", field, "coefficient field")->check(CLI::IsMember({"f2", "q"}));
    sub->add_option("--grid-scale", flags.grid_scale, "multiply every grid size")->check(CLI::PositiveNumber);
    sub->add_option("--out-dir", flags.out_dir, "directory for reports");
    sub->add_flag("--fail-fast", flags.fail_fast, "stop at the first failing check");
  };

  auto* run = app.add_subcommand("run", "run one scenario");
  run->add_option("scenario", scenario, "scenario file, or the name of a bundled scenario")->required();
  run->add_option("--scenario-dir", dir, "directory of bundled scenarios");
  add_common(run);

  auto* list = app.add_subcommand("list-scenarios", "list bundled scenarios");
  list->add_option("--scenario-dir", dir, "directory of bundled scenarios");

  auto* verify = app.add_subcommand("verify-all", "run the full acceptance suite");
  add_common(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (!field.empty()) flags.field = field == "q" ? sq::Field::Q : sq::Field::F2;

  if (*list) {
    auto files = scenario_files(dir);
    if (files.empty()) {
      std::cerr << "no scenarios in " << dir << "\n";
      return 2;
    }
    for (const auto& p : files) {
      try {
        auto doc = load_scenario(p.string());
        std::cout << fmt::format("{:<20} {:<30} {}\n", p.stem().string(), doc.value("certifies", std::string()),
                                 doc.value("summary", std::string()));
      } catch (const std::exception& e) {
        std::cout << fmt::format("{:<20} unreadable: {}\n", p.stem().string(), e.what());
      }
    }
    return 0;
  }

  if (*verify) {
    sq::acceptance::Options opt;
    opt.seed = seed;
    opt.fail_fast = flags.fail_fast;
    auto outcomes = sq::acceptance::run_all(opt, [](const sq::acceptance::Outcome& o) {
      std::cout << sq::acceptance::format_line(o) << std::endl;
    });
    bool ok = true;
    Json summary = Json::array();
    for (const auto& o : outcomes) {
      ok = ok && o.pass;
      summary.push_back({{"criterion", o.id}, {"anchor", o.anchor}, {"pass", o.pass}, {"detail", o.detail}});
    }
    if (verify->count("--out-dir")) {
      fs::create_directories(flags.out_dir);
      std::ofstream(fs::path(flags.out_dir) / "verify-all.json") << summary.dump(2) << "\n";
    }
    return ok ? 0 : 1;
  }

  if (run->count("--seed")) flags.seed = seed;
  const std::string path = resolve(scenario, dir);
  try {
    auto doc = load_scenario(path);
    auto res = run_scenario(doc, flags);
    if (res.checks.empty() && res.outputs.empty()) {
      std::cout << res.name << ": no tasks\n";
      return 0;
    }
    for (const auto& c : res.checks)
      std::cout << fmt::format("{} task {:2} {:<14} {:<28} {}\n", c.pass ? "PASS" : "FAIL", c.task, c.kind, c.anchor,
                               c.detail);
    std::cout << fmt::format("{}: {} checks, {} outputs in {}\n", res.name, res.checks.size(), res.outputs.size(),
                             flags.out_dir);
    return res.pass() ? 0 : 1;
  } catch (const ParseError& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    // guards raised by the library (window on a breakpoint, degenerate critical point, ...)
    std::cerr << path << ": " << e.what() << "\n";
    return 2;
  }
}
