#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "metastab/commands.hpp"
#include "metastab/config.hpp"
#include "metastab/oracles.hpp"

using namespace metastab;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "metastab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliResult r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("metastab_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string write_file(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
  return path.string();
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string golden(const std::string& name) { return std::string(METASTAB_GOLDEN_DIR) + "/" + name; }

const char* kNoiseless = R"({
  "schema_version": 1,
  "landscape": {"family": "quadratic", "curvatures": [1.0, 2.0], "hessian_lipschitz": 0.5},
  "params": {"epsilon": 0.2, "delta": 0.1, "r": 0.025, "T": 1.0},
  "run": {"seed": 4, "replicas": 6, "eta": 0.001, "noiseless": true, "write_trajectories": 2},
  "output": {"formats": ["json", "csv", "md"], "trajectory_format": "binary"}
})";

}  // namespace

TEST_CASE("bounds output is byte identical across runs and formats") {
  for (const std::string fmt : {"json", "md", "csv"}) {
    const CliResult a = cli({"--format", fmt, "--config", golden("quadratic_remark.json"), "bounds"});
    const CliResult b = cli({"--format", fmt, "--config", golden("quadratic_remark.json"), "bounds"});
    CHECK(a.code == kExitOk);
    CHECK(a.out == b.out);
    CHECK_FALSE(a.out.empty());
  }
}

TEST_CASE("bounds at r = eps/8 reports a zero recurrence time") {
  const CliResult r = cli({"--config", golden("quadratic_remark.json"), "bounds"});
  REQUIRE(r.code == kExitOk);
  const std::string json_part = r.out.substr(0, r.out.find("\n\n"));
  const auto j = nlohmann::json::parse(json_part);
  CHECK(j["bounds"]["T_rec"].get<double>() == 0.0);
  CHECK(j["bounds"]["T_esc"].get<double>() == 1.0);
  CHECK(j["family"] == "quadratic");
  CHECK(j["anchors"].contains("T_rec"));
  const CliResult csv = cli({"--format", "csv", "--config", golden("quadratic_remark.json"), "bounds"});
  CHECK(csv.out.rfind("key,value,anchor\n", 0) == 0);
}

TEST_CASE("usage and configuration errors exit with 2") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"bounds"}).code == kExitUsage);
  CHECK(cli({"--config", "/nonexistent.json", "bounds"}).code == kExitUsage);
  const fs::path dir = scratch("bad_config");
  const std::string bad = write_file(dir / "bad.json", R"({"schema_version": 1, "landscape": {"family": "quadratic", "wat": 1}})");
  const CliResult r = cli({"--config", bad, "bounds"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("$.landscape.wat") != std::string::npos);
  CHECK(cli({"--format", "xml", "--config", golden("quadratic_remark.json"), "bounds"}).code == kExitUsage);
}

TEST_CASE("unknown oracle names are a usage error listing the oracles") {
  const fs::path dir = scratch("verify_unknown");
  const CliResult r = cli({"--out", dir.string(), "verify", "no_such_oracle"});
  CHECK(r.code == kExitUsage);
  for (const auto& name : oracle_names()) CHECK(r.err.find(name) != std::string::npos);
  CHECK(cli({"--out", dir.string(), "verify"}).code == kExitUsage);
}

TEST_CASE("verify writes a verdict file") {
  const fs::path dir = scratch("verify_mgf");
  const CliResult r = cli({"--out", dir.string(), "--replicas", "100000", "verify", "gaussian_mgf"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("gaussian_mgf: PASS") != std::string::npos);
  const auto v = nlohmann::json::parse(read_file(dir / "verdict_gaussian_mgf.json"));
  CHECK(v["status"] == "PASS");
  CHECK(v["seed"].get<std::uint64_t>() == default_oracle_seed("gaussian_mgf"));
  CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("noiseless simulation stays in the tube and reruns reproduce every output") {
  const fs::path dir = scratch("simulate");
  const std::string cfg = write_file(dir / "noiseless.json", kNoiseless);
  const CliResult refused = cli({"--config", cfg, "--out", (dir / "refused").string(), "simulate"});
  CHECK(refused.code == kExitFailure);

  const CliResult a = cli({"--config", cfg, "--out", (dir / "a").string(), "--override-admissibility", "simulate"});
  REQUIRE(a.code == kExitOk);
  const auto report = nlohmann::json::parse(read_file(dir / "a" / "report.json"));
  CHECK(report["stay"].get<int>() == 6);
  CHECK(report["violation"].get<int>() == 0);
  CHECK(report["overridden"].get<bool>());
  CHECK(fs::exists(dir / "a" / "report.md"));
  CHECK(fs::exists(dir / "a" / "classifications.csv"));
  CHECK(fs::exists(dir / "a" / "trajectories" / "replica_0.bin"));
  CHECK(fs::exists(dir / "a" / "trajectories" / "replica_1.bin"));
  CHECK_FALSE(fs::exists(dir / "a" / "trajectories" / "replica_2.bin"));

  const CliResult b =
      cli({"--config", cfg, "--out", (dir / "b").string(), "--override-admissibility", "--workers", "2", "simulate"});
  REQUIRE(b.code == kExitOk);
  const auto ma = nlohmann::json::parse(read_file(dir / "a" / "manifest.json"));
  const auto mb = nlohmann::json::parse(read_file(dir / "b" / "manifest.json"));
  CHECK(ma["outputs"] == mb["outputs"]);
  CHECK(ma["config_hash"] == mb["config_hash"]);
  CHECK(ma["complete"].get<bool>());
  for (const auto& o : ma["outputs"]) {
    const std::string path = o["path"];
    CHECK(read_file(dir / "a" / path) == read_file(dir / "b" / path));
    CHECK(hex64(fnv1a64(read_file(dir / "a" / path))) == o["fnv1a64"].get<std::string>());
  }

  const CliResult c = cli({"--config", cfg, "--out", (dir / "c").string(), "classify",
                           (dir / "a" / "trajectories" / "replica_0.bin").string()});
  CHECK(c.code == kExitOk);
  CHECK(c.out.find("STAY") != std::string::npos);
}

TEST_CASE("output directory precedence") {
  ::unsetenv("METASTAB_OUT_DIR");
  CHECK(resolve_output_directory(std::nullopt, "cfg") == "cfg");
  ::setenv("METASTAB_OUT_DIR", "env", 1);
  CHECK(resolve_output_directory(std::nullopt, "cfg") == "env");
  CHECK(resolve_output_directory(std::string("flag"), "cfg") == "flag");
  ::setenv("METASTAB_OUT_DIR", "", 1);
  CHECK(resolve_output_directory(std::nullopt, "cfg") == "cfg");
  ::unsetenv("METASTAB_OUT_DIR");
}

TEST_CASE("sweep writes the escape sample table") {
  const fs::path dir = scratch("sweep");
  const std::string cfg = write_file(dir / "dw.json", R"({
    "schema_version": 1,
    "landscape": {"family": "double_well", "dimension": 1},
    "run": {"seed": 1, "replicas": 8, "eta": 0.05, "budget_K": 3000}
  })");
  const CliResult r = cli({"--config", cfg, "--out", (dir / "o").string(), "sweep", "--betas", "2", "3"});
  REQUIRE(r.code == kExitOk);
  const std::string csv = read_file(dir / "o" / "escape_samples.csv");
  CHECK(csv.rfind("beta,replica,escape_time,censored\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 17);
  const auto j = nlohmann::json::parse(read_file(dir / "o" / "sweep.json"));
  CHECK(j["betas"].size() == 2);
  const CliResult no_betas = cli({"--config", cfg, "--out", (dir / "p").string(), "sweep"});
  CHECK(no_betas.code != kExitOk);
}
