// Configuration parsing, JSON/CSV serialization round trips, pipeline
// determinism, and the command-line exit-code contract (the binary path is
// injected by the build).

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "iongate/config.hpp"
#include "iongate/io.hpp"
#include "iongate/pipeline.hpp"

using namespace iongate;
namespace fs = std::filesystem;

namespace {

json minimal_config() {
  return json{{"n_ions", 2},
              {"gate", {{"T_in_com_periods", 8.0}, {"target", {{"kind", "all_to_all"}}}}},
              {"solver", {{"seed", 5}, {"restarts", 4}}}};
}

fs::path temp_dir() {
  fs::path d = fs::temp_directory_path() / "iongate_cli_test";
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("defaults fill in and unknown keys are rejected") {
  RunConfig cfg = parse_config(minimal_config());
  CHECK(cfg.n_ions == 2);
  CHECK(cfg.gate.T_in_com_periods == 8.0);
  CHECK(cfg.solver.seed == 5);
  CHECK(cfg.verify.fidelity_mode == "exact");
  CHECK(cfg.trap.kind == TrapKind::harmonic);

  json bad = minimal_config();
  bad["gait"] = json::object();
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
  json bad2 = minimal_config();
  bad2["gate"]["tee"] = 1.0;
  CHECK_THROWS_AS(parse_config(bad2), ConfigError);
}

TEST_CASE("physical values are validated") {
  json j = minimal_config();
  j["trap"] = {{"nu1_hz", -1.0}};
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j["trap"] = {{"wavelength_nm", 674.0}, {"wave_number", 1.0e7}};
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j["trap"] = {{"kind", "imaginary"}};
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j.erase("trap");
  j["gate"]["T_in_com_periods"] = 0.0;
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = minimal_config();
  j["verify"] = {{"fidelity_mode", "psychic"}};
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j["verify"] = {{"nbar", {-0.5}}};
  CHECK_THROWS_AS(parse_config(j), ConfigError);
}

TEST_CASE("custom trap requires the mode data and checks row lengths") {
  json j = minimal_config();
  j["trap"] = {{"kind", "custom"}};
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j["trap"] = {{"kind", "custom"},
               {"custom_nu", {1.0, 1.7}},
               {"custom_O", {{1.0, 0.0}, {0.0}}}};
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j["trap"]["custom_O"] = {{1.0, 0.0}, {0.0, 1.0}};
  RunConfig cfg = parse_config(j);
  REQUIRE(cfg.trap.custom.has_value());
  CHECK(cfg.trap.custom->nu.size() == 2);
}

TEST_CASE("config hash is stable and sensitive to the content") {
  RunConfig a = parse_config(minimal_config());
  RunConfig b = parse_config(minimal_config());
  CHECK(config_hash(a) == config_hash(b));
  b.solver.seed = 6;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("vectors and matrices survive a JSON round trip exactly") {
  Eigen::VectorXd v(3);
  v << 0.1, -2.5e-17, 3.0;
  Eigen::VectorXd v2 = vector_from_json(vector_json(v));
  for (int i = 0; i < 3; ++i) CHECK(v2[i] == v[i]);
  Eigen::MatrixXd M(2, 2);
  M << 1.0, M_PI, -1e-300, 4.0;
  Eigen::MatrixXd M2 = matrix_from_json(matrix_json(M));
  CHECK((M2 - M).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("full design pipeline is deterministic and meets its tolerance") {
  RunConfig cfg = parse_config(minimal_config());
  DesignArtifacts a = run_design(cfg);
  DesignArtifacts b = run_design(cfg);
  REQUIRE(a.solution.feasible);
  CHECK(a.I_total < 1e-4);
  REQUIRE(a.solution.r.size() == b.solution.r.size());
  for (int i = 0; i < a.solution.r.size(); ++i) CHECK(a.solution.r[i] == b.solution.r[i]);
  CHECK(a.I_total == b.I_total);
}

TEST_CASE("single-tone baseline hits the reference phase but not the others") {
  json j = minimal_config();
  j["n_ions"] = 2;
  j["gate"]["T_in_com_periods"] = 6.0;
  RunConfig cfg = parse_config(j);
  DesignArtifacts ms = run_ms_baseline(cfg);
  CHECK(std::abs(std::abs(ms.solution.phases[cfg.gate.reference_mode]) - M_PI / 2.0) < 1e-9);
  CHECK(ms.solution.r.size() == 1);
}

#ifdef IONGATE_CLI_PATH
TEST_CASE("command-line exit codes follow the contract") {
  fs::path dir = temp_dir();
  fs::path cfg_path = dir / "ok.json";
  {
    std::ofstream out(cfg_path);
    out << minimal_config().dump(2);
  }
  std::string exe = IONGATE_CLI_PATH;
  auto run = [&](const std::string& args) {
    std::string cmd = exe + " " + args + " > /dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
  };
  CHECK(run("design --config " + cfg_path.string() + " --out " + (dir / "out").string()) == 0);
  CHECK(run("modes --config " + cfg_path.string() + " --out " + (dir / "out").string()) == 0);
  CHECK(run("design --config " + (dir / "missing.json").string()) == 1);
  fs::path bad = dir / "bad.json";
  {
    std::ofstream out(bad);
    out << "{\"n_ions\": 2, \"bogus\": 1}";
  }
  CHECK(run("design --config " + bad.string()) == 1);
  CHECK(fs::exists(dir / "out" / "solution.json"));
  CHECK(fs::exists(dir / "out" / "fidelity.json"));
  CHECK(fs::exists(dir / "out" / "manifest.json"));
  CHECK(fs::exists(dir / "out" / "waveform.csv"));
  // verify sub-command reads the archived solution back
  CHECK(run("verify --config " + cfg_path.string() + " --out " + (dir / "v").string() +
            " --solution " + (dir / "out" / "solution.json").string()) == 0);
  CHECK(fs::exists(dir / "v" / "verify.json"));
}
#endif
