#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

fs::path work_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "psikit_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

RunResult run_cli(const std::string& args, const std::string& env = "") {
  const fs::path out = work_dir() / "stdout.txt";
  const fs::path err = work_dir() / "stderr.txt";
  std::string cmd = env;
  if (!env.empty()) cmd += " ";
  cmd += std::string(PSIKIT_CLI_PATH) + " " + args + " >" + out.string() +
         " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

fs::path write_example_data() {
  const fs::path p = work_dir() / "example.csv";
  spit(p, "x,w\n1,1\n3,1\n");
  return p;
}

}  // namespace

TEST_CASE("estimate: normal-variance example") {
  const fs::path data = write_example_data();
  const fs::path out = work_dir() / "estimate.json";
  const RunResult r = run_cli("estimate --model normal_variance --param m=2 "
                              "--data " + data.string() + " --out " +
                              out.string());
  REQUIRE(r.exit_code == 0);
  const json report = json::parse(slurp(out));
  CHECK(std::abs(report["theta"].get<double>() - 1.0) <= 1e-9);
  CHECK(report["crossing"] == "ZeroCrossing");
  CHECK(report["n"] == 2);
  CHECK(report["sum_weights"] == 2.0);
  CHECK(report["bracket"].contains("lo"));
}

TEST_CASE("estimate: single observation location model, stdout output") {
  const fs::path data = work_dir() / "single.csv";
  spit(data, "x\n5\n");
  const RunResult r =
      run_cli("estimate --model location --data " + data.string());
  REQUIRE(r.exit_code == 0);
  const json report = json::parse(r.out);
  CHECK(std::abs(report["theta"].get<double>() - 5.0) <= 1e-9);
}

TEST_CASE("estimate: missing data file is a config error") {
  const RunResult r = run_cli("estimate --model location --data " +
                              (work_dir() / "nope.csv").string());
  CHECK(r.exit_code == 1);
  const json err = json::parse(r.err);
  CHECK(err["error"]["code"] == "IO_NOT_FOUND");
}

TEST_CASE("estimate: explicit missing weight column is a config error") {
  const fs::path data = write_example_data();
  const RunResult r = run_cli("estimate --model location --data " +
                              data.string() + " --weights-col nope");
  CHECK(r.exit_code == 1);
  const json err = json::parse(r.err);
  CHECK(err["error"]["code"] == "CSV_MISSING_COLUMN");
}

TEST_CASE("estimate: unknown model is a config error") {
  const fs::path data = write_example_data();
  const RunResult r =
      run_cli("estimate --model banana --data " + data.string());
  CHECK(r.exit_code == 1);
  const json err = json::parse(r.err);
  CHECK(err["error"]["code"] == "CONFIG_UNKNOWN_MODEL");
}

TEST_CASE("representation: example family produces monotone tables") {
  const fs::path dir = work_dir() / "rep_example";
  // Family with theta1 values {0.5, 1, 2, 4} for m = 0.
  const RunResult r = run_cli(
      "representation --model normal_variance --param m=0 "
      "--family 0.70710678118654752,1,1.4142135623730951,2 "
      "--grid 0.25,5,512 --tau 1 --out-dir " + dir.string());
  REQUIRE(r.exit_code == 0);

  const std::string weight_csv = slurp(dir / "weight.csv");
  std::stringstream ss(weight_csv);
  std::string line;
  std::getline(ss, line);
  CHECK(line == "t,log_p,p");
  double prev_t = -1.0, prev_p = -1.0;
  int rows = 0;
  while (std::getline(ss, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const double t = std::stod(line.substr(0, c1));
    const double p = std::stod(line.substr(c2 + 1));
    CHECK(t > prev_t);
    CHECK(p > prev_p);  // increasing weight for this family
    prev_t = t;
    prev_p = p;
    ++rows;
  }
  CHECK(rows >= 512);

  const json summary = json::parse(slurp(dir / "summary.json"));
  CHECK(summary["agreement"]["verdict"] == "pass");
  CHECK(summary["envelope"]["fallback_points"].get<int>() > 0);
  CHECK(summary["envelope"]["max_gap"].get<double>() > 0.0);
  CHECK(fs::exists(dir / "envelope.csv"));
  CHECK(fs::exists(dir / "rho_star_000.csv"));
  CHECK(fs::exists(dir / "rho_star_003.csv"));
}

TEST_CASE("representation: grid outside theta is a config error") {
  const fs::path dir = work_dir() / "rep_bad_grid";
  const RunResult r = run_cli(
      "representation --model normal_variance --family 1,2 "
      "--grid -1,5,64 --out-dir " + dir.string());
  CHECK(r.exit_code == 1);
  const json err = json::parse(r.err);
  CHECK(err["error"]["code"] == "CONFIG_GRID_OUT_OF_THETA");
}

TEST_CASE("representation: richness violation is a numeric error") {
  const fs::path dir = work_dir() / "rep_richness";
  // Single family member with theta1 = 4; the grid node at t = 4 sits inside
  // its exclusion radius, leaving no member on either side.
  const RunResult r = run_cli(
      "representation --model normal_variance --family 2 "
      "--grid 3,5,201 --out-dir " + dir.string());
  CHECK(r.exit_code == 2);
  const json err = json::parse(r.err);
  CHECK(err["error"]["code"] == "RICHNESS_VIOLATED");
  CHECK(std::abs(err["error"]["t"].get<double>() - 4.0) <= 0.02);
}

TEST_CASE("malformed CSV is a config error") {
  const fs::path data = work_dir() / "bad.csv";
  spit(data, "x,w\n1,2\n3\n");
  const RunResult r =
      run_cli("estimate --model location --data " + data.string());
  CHECK(r.exit_code == 1);
  const json err = json::parse(r.err);
  CHECK(err["error"]["code"] == "CSV_PARSE");
}

TEST_CASE("diagnose: normal-variance data passes every check") {
  const fs::path data = work_dir() / "diag_ok.csv";
  spit(data, "x,w\n0.5,1\n1,1\n2,2\n3.5,0.5\n");
  const fs::path out = work_dir() / "diag_ok.json";
  const RunResult r = run_cli(
      "diagnose --model normal_variance --param m=0 --data " + data.string() +
      " --out " + out.string());
  REQUIRE(r.exit_code == 0);
  const json report = json::parse(slurp(out));
  CHECK(report["summary"]["fail"].get<int>() == 0);
  CHECK(report["summary"]["pass"].get<int>() > 0);
}

TEST_CASE("diagnose: wiggle counterexample fails with a witness") {
  const fs::path data = work_dir() / "diag_wiggle.csv";
  spit(data, "x\n0\n3\n");
  const fs::path out = work_dir() / "diag_wiggle.json";
  const RunResult r = run_cli(
      "diagnose --model wiggle_location --data " + data.string() + " --out " +
      out.string());
  CHECK(r.exit_code == 3);
  const json report = json::parse(slurp(out));
  CHECK(report["summary"]["fail"].get<int>() > 0);
  bool witnessed = false;
  for (const auto& c : report["checks"]) {
    if (c["verdict"] == "fail" && !c["witness"].is_null()) witnessed = true;
  }
  CHECK(witnessed);
}

TEST_CASE("diagnose: explicit pair list") {
  const fs::path data = work_dir() / "diag_pairs.csv";
  spit(data, "x\n1\n2\n3\n");
  const RunResult r = run_cli(
      "diagnose --model normal_variance --param m=0 --data " + data.string() +
      " --pairs 0,2");
  REQUIRE(r.exit_code == 0);
  const json report = json::parse(r.out);
  bool found = false;
  for (const auto& c : report["checks"]) {
    if (c["name"] == "comparison_monotone/pair_0_2") found = true;
  }
  CHECK(found);
}

TEST_CASE("config file supplies defaults, flags win") {
  const fs::path data = write_example_data();
  const fs::path cfg = work_dir() / "run.cfg";
  spit(cfg, "[estimate]\nmodel = normal_variance\nparam = \"m=2\"\ndata = \"" +
                data.string() + "\"\n");
  const RunResult r = run_cli("--config " + cfg.string() + " estimate");
  REQUIRE(r.exit_code == 0);
  CHECK(std::abs(json::parse(r.out)["theta"].get<double>() - 1.0) <= 1e-9);

  // A flag overrides the config value: m = 0 moves the estimate.
  const RunResult r2 =
      run_cli("--config " + cfg.string() + " estimate --param m=0");
  REQUIRE(r2.exit_code == 0);
  CHECK(std::abs(json::parse(r2.out)["theta"].get<double>() - 5.0) <= 1e-9);
}

TEST_CASE("outputs are byte-identical across runs and thread counts") {
  const fs::path data = write_example_data();
  const fs::path dir1 = work_dir() / "det1";
  const fs::path dir2 = work_dir() / "det2";
  const std::string args =
      "representation --model normal_variance --param m=2 "
      "--family 1,2,3,4 --grid 0.5,6,128 --tau 2 --data " + data.string() +
      " --out-dir ";
  const RunResult a = run_cli(args + dir1.string(), "OMP_NUM_THREADS=1");
  const RunResult b = run_cli(args + dir2.string(), "OMP_NUM_THREADS=4");
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  for (const char* name :
       {"envelope.csv", "weight.csv", "summary.json", "rho_star_000.csv",
        "rho_star_001.csv"}) {
    CHECK(slurp(dir1 / name) == slurp(dir2 / name));
    CHECK_FALSE(slurp(dir1 / name).empty());
  }

  const RunResult e1 = run_cli(
      "estimate --model normal_variance --param m=2 --data " + data.string(),
      "OMP_NUM_THREADS=1");
  const RunResult e2 = run_cli(
      "estimate --model normal_variance --param m=2 --data " + data.string(),
      "OMP_NUM_THREADS=4");
  CHECK(e1.out == e2.out);
  CHECK_FALSE(e1.out.empty());
}
