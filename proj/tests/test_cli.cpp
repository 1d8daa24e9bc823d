#define DOCTEST_CONFIG_IMPLEMENT
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "perc/config.hpp"

using namespace perc;

namespace {

std::string g_cli;      // path to the perclab binary (argv[1])
std::string g_configs;  // path to the configs directory (argv[2])

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE_MESSAGE(in.good(), "missing file: ", path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// CSV minus the wall_ms column (the only nondeterministic field).
std::string strip_wall(const std::string& csv) {
  std::stringstream in(csv), out;
  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.rfind(',');
    out << line.substr(0, pos) << "\n";
  }
  return out.str();
}

int run_cmd(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_THROWS_AS(parse_config_json("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_config_json(R"({"experiment":"nope"})"), ConfigError);
  CHECK_THROWS_AS(parse_config_json(
                      R"({"experiment":"estimate","bogus_field":1})"),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_config_json(
          R"({"experiment":"estimate","model":{"type":"boolean","lambda":0.1,)"
          R"("law":{"kind":"constant","rho":1},"extra":2}})"),
      ConfigError);
  const ExperimentConfig cfg = parse_config_json(
      R"({"experiment":"estimate","n":50,"master_seed":9,)"
      R"("model":{"type":"boolean","lambda":0.2,)"
      R"("law":{"kind":"pareto_tail","alpha":1,"xmin":1}},)"
      R"("event":{"kind":"cross","phase":"occupied","width":6,"height":3}})");
  CHECK(cfg.n == 50);
  CHECK(std::get<BooleanModel>(cfg.model).lambda == 0.2);
}

TEST_CASE("cli runs, emits frozen CSV, and replays bitwise") {
  REQUIRE_MESSAGE(!g_cli.empty(), "pass the perclab path as argv[1]");
  char tmpl[] = "/tmp/perclab_test_XXXXXX";
  REQUIRE(mkdtemp(tmpl) != nullptr);
  const std::string dir = tmpl;

  const std::string cfg_path = dir + "/cfg.json";
  {
    std::ofstream out(cfg_path);
    out << R"({
      "experiment": "estimate",
      "model": {"type": "boolean", "lambda": 0.3,
                "law": {"kind": "constant", "rho": 1}},
      "event": {"kind": "cross", "phase": "occupied",
                "width": 12, "height": 4},
      "n": 120, "master_seed": 31415
    })";
  }

  SUBCASE("exit 0 and golden header") {
    REQUIRE(run_cmd(g_cli + " run --config " + cfg_path + " --out " + dir +
                    "/a") == 0);
    const std::string csv = slurp(dir + "/a/results.csv");
    CHECK(csv.rfind(kCsvHeader, 0) == 0);
  }

  SUBCASE("same seed gives byte-identical CSV modulo wall time") {
    REQUIRE(run_cmd(g_cli + " run --config " + cfg_path + " --out " + dir +
                    "/b1 --threads 1") == 0);
    REQUIRE(run_cmd(g_cli + " run --config " + cfg_path + " --out " + dir +
                    "/b2 --threads 4") == 0);
    CHECK(strip_wall(slurp(dir + "/b1/results.csv")) ==
          strip_wall(slurp(dir + "/b2/results.csv")));
  }

  SUBCASE("replay matches; altered seed mismatches") {
    REQUIRE(run_cmd(g_cli + " run --config " + cfg_path + " --out " + dir +
                    "/c") == 0);
    CHECK(run_cmd(g_cli + " replay --summary " + dir + "/c/summary.json") ==
          0);
    CHECK(run_cmd(g_cli + " replay --summary " + dir +
                  "/c/summary.json --threads 3") == 0);
    // Flip the stored seed everywhere (config echo and rows): outcomes
    // differ and replay must say so.
    std::string summary = slurp(dir + "/c/summary.json");
    const std::string needle = "\"master_seed\": 31415";
    std::size_t pos = summary.find(needle);
    REQUIRE(pos != std::string::npos);
    while (pos != std::string::npos) {
      summary.replace(pos, needle.size(), "\"master_seed\": 31416");
      pos = summary.find(needle, pos);
    }
    std::ofstream(dir + "/c/summary.json") << summary;
    CHECK(run_cmd(g_cli + " replay --summary " + dir + "/c/summary.json") ==
          4);
  }

  SUBCASE("unpaddable law exits 3 with the error recorded") {
    const std::string bad = dir + "/bad.json";
    std::ofstream(bad) << R"({
      "experiment": "estimate",
      "model": {"type": "boolean", "lambda": 0.3,
                "law": {"kind": "pareto2", "xmin": 1}},
      "event": {"kind": "cross", "phase": "occupied", "width": 8,
                "height": 4},
      "n": 10, "master_seed": 1
    })";
    CHECK(run_cmd(g_cli + " run --config " + bad + " --out " + dir + "/d") ==
          3);
    const std::string summary = slurp(dir + "/d/summary.json");
    CHECK(summary.find("unpaddable") != std::string::npos);
  }

  SUBCASE("validation failures exit 2") {
    const std::string bad = dir + "/invalid.json";
    std::ofstream(bad) << R"({"experiment": "estimate", "mystery": 1})";
    CHECK(run_cmd(g_cli + " run --config " + bad + " --out " + dir + "/e") ==
          2);
  }
}

TEST_CASE("shipped example configs parse") {
  if (g_configs.empty()) return;
  for (const char* name :
       {"estimate_cross.json", "duality_check.json", "coverage.json",
        "critical_const1.json", "arm_pareto.json", "voronoi_selfdual.json",
        "russo.json", "truncation_pareto.json", "corr_pareto.json"}) {
    const std::string path = g_configs + "/" + name;
    std::ifstream probe(path);
    if (!probe.good()) continue;
    CHECK_NOTHROW(load_config(path));
  }
}

TEST_CASE("every experiment runs and replays bitwise") {
  REQUIRE(!g_cli.empty());
  char tmpl[] = "/tmp/perclab_exp_XXXXXX";
  REQUIRE(mkdtemp(tmpl) != nullptr);
  const std::string dir = tmpl;
  const char* boolean_model =
      R"("model": {"type": "boolean", "lambda": 0.3,
                   "law": {"kind": "constant", "rho": 1}})";

  const std::vector<std::pair<const char*, std::string>> experiments = {
      {"curve", std::string(R"({"experiment": "curve", )") + boolean_model +
                    R"(, "levels": [0.2, 0.5], "kappa": 3.0, "r_list": [4],
                       "phase": "occupied", "n": 80, "master_seed": 11})"},
      {"critical", std::string(R"({"experiment": "critical", )") +
                       boolean_model +
                       R"(, "r_schedule": [4, 8],
                          "bracket": {"lo": 0.02, "hi": 2.0,
                                      "rel_tolerance": 0.5,
                                      "max_classify_calls": 8},
                          "n": 800, "master_seed": 12})"},
      {"arm", std::string(R"({"experiment": "arm", )") + boolean_model +
                  R"(, "radii": [2, 4, 8, 16], "arm_phase": "occupied",
                     "n": 80, "master_seed": 13})"},
      {"corr", std::string(R"({"experiment": "corr", )") + boolean_model +
                   R"(, "corr": {"r": 4, "s": 4}, "n": 300,
                      "master_seed": 14})"},
      {"russo", std::string(R"({"experiment": "russo", )") + boolean_model +
                    R"(, "russo": {"lambda_target": 0.2, "r": 4, "m": 2,
                                   "dp": 0.1},
                       "n": 200, "master_seed": 15})"},
      {"duality-check",
       std::string(R"({"experiment": "duality-check", )") + boolean_model +
           R"(, "duality": {"levels": [0.3], "r_list": [4],
                            "pixel_list": [64, 128]},
              "n": 200, "master_seed": 16})"},
      {"coverage", std::string(R"({"experiment": "coverage", )") +
                       boolean_model +
                       R"(, "coverage": {"r_pad": 16, "lambdas": [0.1, 0.3]},
                          "n": 2000, "master_seed": 17})"},
      {"truncation", std::string(R"({"experiment": "truncation", )") +
                         boolean_model +
                         R"(, "truncation": {"caps": [2, 4]},
                            "r_schedule": [4, 8],
                            "bracket": {"lo": 0.02, "hi": 2.0,
                                        "rel_tolerance": 0.5,
                                        "max_classify_calls": 8},
                            "n": 800, "master_seed": 18})"},
  };

  for (const auto& [name, cfg] : experiments) {
    CAPTURE(name);
    const std::string cfg_path = dir + "/" + name + ".json";
    std::ofstream(cfg_path) << cfg;
    const std::string out = dir + "/" + name;
    REQUIRE(run_cmd(g_cli + " run --config " + cfg_path + " --out " + out) ==
            0);
    CHECK(run_cmd(g_cli + " replay --summary " + out +
                  "/summary.json --rows all > /dev/null") == 0);
  }
}

TEST_CASE("scalar and simd backends give identical outputs") {
  REQUIRE(!g_cli.empty());
  char tmpl[] = "/tmp/perclab_bk_XXXXXX";
  REQUIRE(mkdtemp(tmpl) != nullptr);
  const std::string dir = tmpl;
  const std::string cfg_path = dir + "/cfg.json";
  std::ofstream(cfg_path) << R"({
    "experiment": "estimate",
    "model": {"type": "voronoi", "q": 0.45,
              "g0": {"constant": 1.0}, "g1": {"constant": 2.0}},
    "event": {"kind": "cross", "phase": "occupied", "width": 6, "height": 6},
    "n": 60, "master_seed": 4141,
    "policy": {"pixels0": 64, "pixels_min": 128}
  })";
  REQUIRE(run_cmd(g_cli + " run --config " + cfg_path + " --out " + dir +
                  "/simd") == 0);
  REQUIRE(run_cmd("PERC_FORCE_SCALAR=1 " + g_cli + " run --config " +
                  cfg_path + " --out " + dir + "/scalar") == 0);
  CHECK(strip_wall(slurp(dir + "/simd/results.csv")) ==
        strip_wall(slurp(dir + "/scalar/results.csv")));
}

TEST_CASE("oracle cross-validation row") {
  REQUIRE(!g_cli.empty());
  char tmpl[] = "/tmp/perclab_orc_XXXXXX";
  REQUIRE(mkdtemp(tmpl) != nullptr);
  const std::string dir = tmpl;
  const std::string cfg_path = dir + "/cfg.json";
  std::ofstream(cfg_path) << R"({
    "experiment": "estimate",
    "model": {"type": "boolean", "lambda": 0.3,
              "law": {"kind": "constant", "rho": 1}},
    "event": {"kind": "cross", "phase": "occupied", "width": 6, "height": 3},
    "n": 150, "master_seed": 77
  })";
  REQUIRE(run_cmd(g_cli + " run --config " + cfg_path + " --out " + dir +
                  "/o --oracle") == 0);
  const std::string csv = slurp(dir + "/o/results.csv");
  CHECK(csv.find("oracle_agreement") != std::string::npos);
}

int main(int argc, char** argv) {
  int consumed = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg.rfind("--", 0) != 0) {
      if (consumed == 0)
        g_cli = arg;
      else if (consumed == 1)
        g_configs = arg;
      ++consumed;
    }
  }
  doctest::Context ctx(1, argv);
  return ctx.run();
}
