#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "f4nls/config.hpp"

using namespace f4nls;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

json evolve_doc() {
  return json::parse(R"({
    "command": "evolve",
    "grid": {"ndim": 1, "points": [64], "half_width": [8]},
    "dispersion": {"epsilon": 0.0, "delta": 1.0},
    "nonlinearity": {"lambda": 0.0, "alpha": 2.0},
    "initial": {"kind": "gaussian"},
    "evolve": {"t_end": 0.01}
  })");
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("f4nls_test_config_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_doc(const fs::path& dir, const json& doc) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << doc.dump(2);
  return p;
}

int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(F4NLS_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string without_timestamp(const std::string& s) {
  std::istringstream is(s);
  std::string out;
  for (std::string line; std::getline(is, line);)
    if (line.rfind(timestamp_key, 0) != 0) out += line + "\n";
  return out;
}

}  // namespace

TEST_CASE("minimal evolve config fills and echoes defaults") {
  const RunConfig rc = parse_config_json(evolve_doc());
  CHECK(rc.command == Command::evolve);
  CHECK(rc.evolve.dt == 1e-3);
  CHECK(rc.evolve.snapshot_stride == 1);
  CHECK(rc.resolved["evolve"]["dt"] == 1e-3);
  CHECK(rc.resolved["evolve"]["snapshot_stride"] == 1);
  CHECK(rc.resolved["dispersion"]["variant"] == "isotropic");
  CHECK(rc.resolved["out_dir"] == "out");
}

TEST_CASE("every unknown key is listed") {
  json doc = evolve_doc();
  doc["colour"] = "red";
  doc["grid"]["spacing"] = 0.1;
  doc["evolve"]["steps"] = 10;
  try {
    parse_config_json(doc);
    FAIL("accepted unknown keys");
  } catch (const ConfigError& e) {
    const std::string m = e.what();
    CHECK_THAT(m, ContainsSubstring("colour: unknown key"));
    CHECK_THAT(m, ContainsSubstring("grid.spacing: unknown key"));
    CHECK_THAT(m, ContainsSubstring("evolve.steps: unknown key"));
  }
}

TEST_CASE("physical parameters have no hidden defaults") {
  json doc = evolve_doc();
  doc["dispersion"].erase("epsilon");
  doc["nonlinearity"].erase("alpha");
  try {
    parse_config_json(doc);
    FAIL("accepted missing physical parameters");
  } catch (const ConfigError& e) {
    CHECK_THAT(e.what(), ContainsSubstring("dispersion.epsilon: is required"));
    CHECK_THAT(e.what(), ContainsSubstring("nonlinearity.alpha: is required"));
  }
}

TEST_CASE("type errors and unknown commands are reported") {
  json doc = evolve_doc();
  doc["grid"]["points"] = "many";
  CHECK_THROWS_WITH(parse_config_json(doc), ContainsSubstring("grid.points: has the wrong type"));
  doc = evolve_doc();
  doc["command"] = "simulate";
  CHECK_THROWS_WITH(parse_config_json(doc), ContainsSubstring("unknown command 'simulate'"));
  doc = evolve_doc();
  doc["decay"] = json::object();  // block of another command
  CHECK_THROWS_WITH(parse_config_json(doc), ContainsSubstring("decay: unknown key"));
}

TEST_CASE("eps-limit h2 with alpha = 3 is rejected at parse time") {
  json doc = evolve_doc();
  doc["command"] = "eps-limit";
  doc.erase("evolve");
  doc["nonlinearity"] = {{"lambda", 1.0}, {"alpha", 3.0}};
  doc["eps_limit"] = {{"mode", "h2"}, {"eps_list", {0.1, 0.05}}, {"t_eval", 0.1}};
  CHECK_THROWS_WITH(parse_config_json(doc), ContainsSubstring("α must be a positive even integer"));
  doc["nonlinearity"]["alpha"] = 2.0;
  CHECK_NOTHROW(parse_config_json(doc));
  doc["eps_limit"] = {{"mode", "weak"}, {"eps_list", {0.1}}, {"t_eval", 0.1}, {"r", 1.0}};
  CHECK_THROWS_WITH(parse_config_json(doc), ContainsSubstring("r > alpha / (1 - beta)"));
}

TEST_CASE("picard config at the apex Q0 is rejected with the region rule") {
  json doc = evolve_doc();
  doc["command"] = "picard";
  doc.erase("evolve");
  doc["nonlinearity"] = {{"lambda", 1.0}, {"alpha", 2.0}};
  doc["picard"] = {{"p", 1.0}};
  CHECK_THROWS_WITH(parse_config_json(doc), ContainsSubstring("3x + y > 2") && ContainsSubstring("outside"));
  doc["picard"]["p"] = 1.2;
  CHECK_NOTHROW(parse_config_json(doc));
}

TEST_CASE("selfsim config rejects nonzero epsilon") {
  const json doc = json::parse(R"({
    "command": "selfsim",
    "dispersion": {"epsilon": 0.1, "delta": 1.0},
    "nonlinearity": {"lambda": 1.0, "alpha": 2.0}
  })");
  CHECK_THROWS_WITH(parse_config_json(doc), ContainsSubstring("epsilon = 0"));
}

TEST_CASE("shipped configs parse") {
  for (const auto& entry : fs::directory_iterator(F4NLS_CONFIG_DIR)) {
    INFO(entry.path());
    CHECK_NOTHROW(parse_config(entry.path()));
  }
}

TEST_CASE("cli: evolve with lambda = 0 exits 0 and writes snapshots") {
  const fs::path dir = scratch("evolve");
  json doc = evolve_doc();
  doc["evolve"]["snapshot_stride"] = 5;
  const fs::path cfg = write_doc(dir, doc);
  REQUIRE(cli("--config " + cfg.string() + " --out " + (dir / "out").string(), dir / "log") == exit_pass);
  CHECK(fs::exists(dir / "out" / "snapshot_0.f4ns"));
  CHECK(fs::exists(dir / "out" / "snapshot_2.f4ns"));
  CHECK(read_metrics(dir / "out" / "metrics.csv").rows.size() == 3);
  const SnapshotData last = read_snapshot(dir / "out" / "snapshot_2.f4ns");
  CHECK(last.t == Catch::Approx(0.01));
}

TEST_CASE("cli: identical runs give identical summaries apart from the timestamp") {
  const fs::path dir = scratch("repeat");
  const fs::path cfg = write_doc(dir, evolve_doc());
  REQUIRE(cli("--config " + cfg.string() + " --out " + (dir / "a").string(), dir / "log_a") == 0);
  REQUIRE(cli("--config " + cfg.string() + " --out " + (dir / "b").string() + " --threads 3", dir / "log_b") == 0);
  const std::string a = slurp(dir / "a" / "summary.txt"), b = slurp(dir / "b" / "summary.txt");
  CHECK_THAT(a, ContainsSubstring(timestamp_key));
  // out_dir and threads are echoed; everything else matches.
  auto strip = [](std::string s) {
    std::istringstream is(without_timestamp(s));
    std::string out;
    for (std::string line; std::getline(is, line);)
      if (line.rfind("config.out_dir", 0) != 0 && line.rfind("config.threads", 0) != 0) out += line + "\n";
    return out;
  };
  CHECK(strip(a) == strip(b));
  CHECK(slurp(dir / "a" / "metrics.csv") == slurp(dir / "b" / "metrics.csv"));
}

TEST_CASE("cli: dry run echoes the resolved config and computes nothing") {
  const fs::path dir = scratch("dry");
  json doc = evolve_doc();
  doc["out_dir"] = (dir / "out").string();
  const fs::path cfg = write_doc(dir, doc);
  REQUIRE(cli("--config " + cfg.string() + " --dry-run --seed 7", dir / "log") == 0);
  const json echoed = json::parse(slurp(dir / "log"));
  CHECK(echoed["evolve"]["dt"] == 1e-3);
  CHECK(echoed["seed"] == 7);
  CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("cli: exit codes") {
  const fs::path dir = scratch("codes");
  SECTION("decay study meeting tolerance exits 0") {
    CHECK(cli("--config " + std::string(F4NLS_CONFIG_DIR) + "/decay.json --out " + (dir / "decay").string(),
              dir / "log") == exit_pass);
  }
  SECTION("radial negative control exits with a verdict failure") {
    CHECK(cli("--config " + std::string(F4NLS_CONFIG_DIR) + "/radial_negative.json --out " + (dir / "neg").string(),
              dir / "log") == exit_verdict);
    CHECK_THAT(slurp(dir / "log"), ContainsSubstring("first failing verdict: ring angular variance"));
  }
  SECTION("schema violation exits 3") {
    json doc = evolve_doc();
    doc["bogus"] = 1;
    CHECK(cli("--config " + write_doc(dir, doc).string(), dir / "log") == exit_config);
    CHECK_THAT(slurp(dir / "log"), ContainsSubstring("bogus"));
  }
  SECTION("non-finite field exits 4") {
    json doc = evolve_doc();
    doc["nonlinearity"]["lambda"] = 1.0;
    doc["initial"]["amplitude"] = 1e200;
    CHECK(cli("--config " + write_doc(dir, doc).string() + " --out " + (dir / "nan").string(), dir / "log") ==
          exit_numeric);
  }
  SECTION("unwritable output exits 5") {
    std::ofstream(dir / "blocker") << "x";
    CHECK(cli("--config " + write_doc(dir, evolve_doc()).string() + " --out " + (dir / "blocker" / "x").string(),
              dir / "log") == exit_io);
  }
}
