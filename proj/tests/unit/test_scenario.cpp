#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "scenario.hpp"
#include "toml_subset.hpp"

using namespace sq::cli;

TEST_CASE("toml subset: tables, arrays of tables and values") {
  auto j = parse_toml(R"toml(# header comment
name = "cusp"   # trailing comment
seed = 7
scale = 1.5e-1
on = true
list = [1, 2.5, "inf",
        [3, 4],]

[genfun.f]
base = [{ kind = "circle", n = 24 }]
expr = 'x^2 \ raw'

[genfun.g]
fiber = { k = 1, R = 3.0 }
"quoted key" = "a\"b\n"

[[task]]
kind = "quantize"

[[task]]
kind = "ss"
opts.tau = 0.05
)toml");
  CHECK(j["name"] == "cusp");
  CHECK(j["seed"] == 7);
  CHECK(j["seed"].is_number_integer());
  CHECK(j["scale"].get<double>() == doctest::Approx(0.15));
  CHECK(j["on"] == true);
  CHECK(j["list"].size() == 4);
  CHECK(j["list"][2] == "inf");
  CHECK(j["list"][3][1] == 4);
  CHECK(j["genfun"]["f"]["base"][0]["n"] == 24);
  CHECK(j["genfun"]["f"]["expr"] == "x^2 \\ raw");
  CHECK(j["genfun"]["g"]["fiber"]["R"].get<double>() == 3.0);
  CHECK(j["genfun"]["g"]["quoted key"] == "a\"b\n");
  REQUIRE(j["task"].size() == 2);
  CHECK(j["task"][1]["kind"] == "ss");
  CHECK(j["task"][1]["opts"]["tau"].get<double>() == doctest::Approx(0.05));
  // keys keep their order
  CHECK(j.begin().key() == "name");
}

TEST_CASE("toml subset: errors carry line and column") {
  auto where = [](const std::string& text) {
    try {
      parse_toml(text);
    } catch (const ParseError& e) {
      return std::pair{e.line(), e.column()};
    }
    return std::pair{0, 0};
  };
  CHECK(where("a = 1\nb = \n") == std::pair{2, 5});
  CHECK(where("a = 1\na = 2\n") == std::pair{2, 1});
  CHECK(where("x = \"open\n").first == 1);
  CHECK(where("[t]\nv = [1 2]\n").first == 2);
  CHECK(where("v = 1 2\n") == std::pair{1, 7});
  CHECK(where("v = 1.2.3\n").first == 1);
  CHECK(where("v = \"\\q\"\n").first == 1);
  CHECK(where("[a]\nb = 1\n[a.b]\n").first == 3);
  CHECK_THROWS_WITH_AS(parse_toml("\n\n  = 3\n"), doctest::Contains("line 3, column 3"), ParseError);
}

TEST_CASE("scenario with no tasks writes nothing") {
  auto dir = std::filesystem::temp_directory_path() / "sheafq_empty_scenario";
  std::filesystem::remove_all(dir);
  RunFlags flags;
  flags.out_dir = dir.string();
  auto res = run_scenario(parse_toml("name = \"empty\"\n"), flags);
  CHECK(res.checks.empty());
  CHECK(res.outputs.empty());
  CHECK_FALSE(std::filesystem::exists(dir));
}

TEST_CASE("unresolved references are input errors before anything runs") {
  auto dir = std::filesystem::temp_directory_path() / "sheafq_bad_scenario";
  std::filesystem::remove_all(dir);
  RunFlags flags;
  flags.out_dir = dir.string();
  auto doc = parse_toml(R"toml(
[genfun.f]
base = [{ kind = "circle", n = 8 }]
expr = "sin(2*pi*x)"

[[task]]
kind = "quantize"
sheaf = "f"

[[task]]
kind = "ss"
sheaf = "missing"
)toml");
  CHECK_THROWS_WITH_AS(run_scenario(doc, flags), doctest::Contains("unknown generating function 'missing'"),
                       InputError);
  CHECK_FALSE(std::filesystem::exists(dir));
  auto bad_kind = parse_toml("[[task]]\nkind = \"plot\"\n");
  CHECK_THROWS_AS(run_scenario(bad_kind, flags), InputError);
  auto bad_expr = parse_toml(R"toml(
[genfun.f]
base = [{ kind = "circle", n = 8 }]
expr = "x + xi"
[[task]]
kind = "quantize"
sheaf = "f"
)toml");
  CHECK_THROWS_WITH_AS(run_scenario(bad_expr, flags), doctest::Contains("fiber"), InputError);
}

TEST_CASE("json scenarios use the same schema") {
  auto dir = std::filesystem::temp_directory_path() / "sheafq_json_scenario";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto path = dir / "s.json";
  std::ofstream(path) << R"json({"name": "j", "genfun": {"f": {"base": [{"kind": "circle", "n": 32}],
    "expr": "0.3*sin(2*pi*x)"}}, "task": [{"kind": "ss", "sheaf": "f"}]})json";
  auto doc = load_scenario(path.string());
  RunFlags flags;
  flags.out_dir = (dir / "out").string();
  auto res = run_scenario(doc, flags);
  REQUIRE(res.checks.size() == 1);
  CHECK(res.checks[0].pass);
  CHECK(res.checks[0].anchor == "singular-support-fidelity");
  std::ofstream(dir / "bad.json") << "{\n  \"name\": ,\n}";
  try {
    load_scenario((dir / "bad.json").string());
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}
