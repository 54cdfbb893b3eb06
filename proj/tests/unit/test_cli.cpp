#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "platelab/cli.hpp"

using namespace platelab::cli;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "plate_lab");
  std::vector<const char*> argv;
  for (auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string temp_file(const std::string& name, const std::string& content) {
  const std::string path = "platelab_test_" + name;
  std::ofstream(path) << content;
  return path;
}

}  // namespace

TEST_CASE("config parsing") {
  std::istringstream in("# comment\nn_cells = 10\nbc=hinged  # trailing\n\nratio = 2.5\nlist = 1, 2,3\nflag = yes\n");
  auto cfg = RunConfig::parse(in, "run.cfg");
  CHECK(cfg.get_int("n-cells") == 10);
  CHECK(cfg.get_string("bc") == "hinged");
  CHECK(cfg.get_double("ratio") == 2.5);
  CHECK(cfg.get_list("list") == std::vector<double>{1, 2, 3});
  CHECK(cfg.get_bool("flag"));
  CHECK(cfg.entry("bc").source == "run.cfg:3");
  CHECK_THROWS_AS(cfg.get_int("ratio"), ConfigError);
  CHECK_THROWS_AS(cfg.get_bool("bc"), ConfigError);

  std::istringstream dup("a = 1\na = 2\n");
  CHECK_THROWS_AS(RunConfig::parse(dup, "x"), ConfigError);
  std::istringstream noeq("just words\n");
  try {
    RunConfig::parse(noeq, "x.cfg");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("x.cfg:1") != std::string::npos);
  }
}

TEST_CASE("later sources override earlier ones") {
  std::istringstream a("n = 10\nbc = hinged\n"), b("n = 20\n");
  auto cfg = RunConfig::parse(a, "file");
  cfg.merge(RunConfig::parse(b, "flags"));
  CHECK(cfg.get_int("n") == 20);
  CHECK(cfg.get_string("bc") == "hinged");
}

TEST_CASE("json floats carry 17 significant digits") {
  const std::string s = dump_json(nlohmann::json{{"x", 0.1}, {"bad", std::nan("")}}, -1);
  CHECK(s.find("0.10000000000000001") != std::string::npos);
  CHECK(s.find("null") != std::string::npos);
}

TEST_CASE("command list") {
  const auto names = command_names();
  for (const char* c : {"ls-check", "roots", "subell", "gamma-search", "assemble", "spectrum", "simulate",
                        "resolvent", "decay-fit", "catalog"})
    CHECK(std::find(names.begin(), names.end(), c) != names.end());
}

TEST_CASE("exit codes") {
  CHECK(invoke({"ls-check", "--bc", "clamped", "--samples", "50"}).code == kExitPass);
  CHECK(invoke({"ls-check", "--bc", "degenerate_equal", "--tau", "0"}).code == kExitCheckFailed);
  CHECK(invoke({"ls-check", "--bc", "nonsense"}).code == kExitConfigError);
  CHECK(invoke({"spectrum", "--n", "3"}).code == kExitConfigError);
  CHECK(invoke({"spectrum", "--n", "ten"}).code == kExitConfigError);
  CHECK(invoke({"frobnicate"}).code == kExitConfigError);
  CHECK(invoke({"spectrum", "--config", "/nonexistent/file.cfg"}).code == kExitConfigError);
}

TEST_CASE("unknown keys in a config file are reported with their location") {
  const auto path = temp_file("unknown.cfg", "n = 20\nbogus = 1\n");
  auto r = invoke({"spectrum", "--config", path});
  CHECK(r.code == kExitConfigError);
  CHECK(r.err.find(path + ":2") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("flags override config values") {
  const auto path = temp_file("spec.cfg", "bc = hinged\nn = 40\ncount = 2\n");
  auto a = invoke({"spectrum", "--config", path});
  auto b = invoke({"spectrum", "--config", path, "--n", "80"});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(a.out != b.out);
  CHECK(a.out.find("k,mu") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("output is deterministic for a fixed seed") {
  auto a = invoke({"ls-check", "--bc", "hinged", "--samples", "40", "--seed", "7"});
  auto b = invoke({"ls-check", "--bc", "hinged", "--samples", "40", "--seed", "7"});
  CHECK(a.out == b.out);
}

TEST_CASE("simulate and decay-fit pipeline") {
  const std::string log = "platelab_test_energy.csv";
  auto s = invoke({"simulate", "--bc", "clamped", "--n", "30", "--T", "1", "--dt", "0.01", "--out", log});
  REQUIRE(s.code == 0);
  auto f = invoke({"decay-fit", "--in", log});
  CHECK(f.code == 0);
  CHECK(f.out.find("\"c\"") != std::string::npos);
  CHECK(invoke({"decay-fit", "--in", log, "--amp", "0"}).code == kExitConfigError);
  std::remove(log.c_str());
}

TEST_CASE("catalog lists every pair") {
  auto r = invoke({"catalog"});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("pairs").size() == 7);
}

TEST_CASE("manifest records the run") {
  const std::string m = "platelab_test_manifest.json";
  auto r = invoke({"roots", "--manifest", m});
  REQUIRE(r.code == 0);
  std::ifstream in(m);
  auto j = nlohmann::json::parse(in);
  CHECK(j.at("command") == "roots");
  CHECK(j.at("exit_code") == 0);
  CHECK(j.at("config").contains("tau"));
  std::remove(m.c_str());
}
