#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

// Runs the CLI inside `dir` and returns its exit status and stdout.
Run cli(const fs::path& dir, const std::string& args) {
  fs::path log = dir / "stdout.txt";
  std::string cmd = "cd '" + dir.string() + "' && '" + std::string(FRONTLAB_CLI_PATH) + "' " + args + " > '" +
                    log.string() + "' 2> '" + (dir / "stderr.txt").string() + "'";
  int raw = std::system(cmd.c_str());
  Run r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("frontlab_cli_" + std::to_string(std::rand()) + "_" +
                                        std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("simulate writes schema-tagged outputs and refuses to overwrite") {
  TempDir d;
  auto r = cli(d.path, "simulate --horizon 50 --seed 3 --window 2000 --front front.csv --hitting hit.csv");
  REQUIRE(r.status == 0);
  CHECK(slurp(d.path / "run.csv").rfind("# frontlab-schema=", 0) == 0);
  CHECK(slurp(d.path / "front.csv").rfind("# frontlab-schema=", 0) == 0);
  auto j = nlohmann::json::parse(slurp(d.path / "run.csv.json"));
  CHECK(j["schema"]["name"] == "frontlab");
  CHECK(cli(d.path, "simulate --horizon 50 --seed 3 --window 2000").status == 1);
  CHECK(cli(d.path, "simulate --horizon 50 --seed 3 --window 2000 --force").status == 0);
}

TEST_CASE("bad flags and bad values exit with status 1") {
  TempDir d;
  CHECK(cli(d.path, "simulate --no-such-flag").status == 1);
  CHECK(cli(d.path, "").status == 1);
  CHECK(cli(d.path, "simulate --mode sideways").status == 1);
  CHECK(cli(d.path, "experiment --name nonsense").status == 1);
  CHECK(cli(d.path, "stefan --rho 1.5").status == 1);
  CHECK(cli(d.path, "simulate --mode custom --q-file missing.csv").status == 1);
}

TEST_CASE("regime violations are usage errors") {
  TempDir d;
  CHECK(cli(d.path, "experiment --name boundary-layer --set v=0.9 --set runs=1").status == 1);
  auto ok = cli(d.path, "regime-check --eps 0.0014 --a 0.1 --gamma 0.5 --gamma-prime 0.86 --t0 16000 --x0 700 --v 0.02");
  REQUIRE(ok.status == 0);
  auto j = nlohmann::json::parse(ok.out);
  CHECK(j["parameters"]["ok"] == true);
  CHECK(j["sigma"]["ok"] == true);
}

TEST_CASE("config file values override flags") {
  TempDir d;
  std::ofstream(d.path / "cfg.toml") << "[stefan]\nrho = 0.25\n";
  auto r = cli(d.path, "stefan --rho 0.5 --config cfg.toml");
  REQUIRE(r.status == 0);
  CHECK(r.out.find("kappa=") != std::string::npos);
  auto j = nlohmann::json::parse(slurp(d.path / "stefan_profile.csv.json"));
  CHECK(j["rho"].get<double>() == 0.25);
  std::ofstream(d.path / "bad.toml") << "nonsense_key = 3\n";
  CHECK(cli(d.path, "stefan --config bad.toml --force").status == 1);
}

TEST_CASE("limit-sample writes its default table") {
  TempDir d;
  REQUIRE(cli(d.path, "limit-sample --n 20 --seed 4 --xi-cap 50").status == 0);
  auto s = slurp(d.path / "limit_samples.csv");
  CHECK(s.rfind("# frontlab-schema=", 0) == 0);
}

TEST_CASE("experiment writes a JSON summary and tables") {
  TempDir d;
  auto r = cli(d.path, "experiment --name identities --preset small --set runs=3 --seed 9");
  REQUIRE(r.status == 0);
  auto j = nlohmann::json::parse(slurp(d.path / "identities.json"));
  CHECK(j["pass"] == true);
  CHECK(j["schema"]["kind"] == "experiment-summary");
  CHECK(j["params"]["runs"] == "3");
  CHECK(j["master_seed"] == 9);
  CHECK(cli(d.path, "experiment --name identities --preset small --set bogus=1 --force").status == 1);
}

TEST_CASE("ensemble runs the fast engine") {
  TempDir d;
  REQUIRE(cli(d.path, "ensemble --runs 4 --times 10,100 --seed 2 --out ens.csv").status == 0);
  CHECK(slurp(d.path / "ens.csv").find("run,t,r") != std::string::npos);
}
