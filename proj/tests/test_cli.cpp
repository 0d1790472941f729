#include <doctest.h>

#include "fixtures.hpp"
#include "sparsecox/partial_likelihood.hpp"
#include "sparsecox/report.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace sparsecox;

namespace {

struct Run {
  int code;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() /
                     ("sparsecox_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

Run run(const std::string& args) {
  const fs::path logs = scratch("logs");
  const std::string cmd = std::string(SPARSECOX_CLI) + " " + args + " > " +
                          (logs / "out").string() + " 2> " + (logs / "err").string();
  const int status = std::system(cmd.c_str());
  Run r{WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(logs / "out"), slurp(logs / "err")};
  return r;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

const std::string kData = std::string(SPARSECOX_SOURCE_DIR) + "/tests/data";
const std::string kStudies = std::string(SPARSECOX_SOURCE_DIR) + "/studies";

}  // namespace

TEST_CASE("fit with a large gamma reproduces Nelson-Aalen") {
  const fs::path dir = scratch("d1");
  const auto ds = fixture::d1();
  write_text_file((dir / "d1.csv").string(), format_csv(ds));
  const double u0 = score(ds, Vector::Zero(2)).lpNorm<Eigen::Infinity>();
  const auto r = run("fit --input " + (dir / "d1.csv").string() + " --output-dir " +
                     (dir / "out").string() + " --gamma " + format_double(u0));
  REQUIRE(r.code == 0);
  const auto fit = Json::parse(slurp(dir / "out" / "fit.json"));
  for (const auto& b : fit["dantzig"]["beta_hat"]) CHECK(b.get<double>() == 0.0);
  CHECK(fit["support"].empty());
  CHECK(fit["metadata"].contains("settings_hash"));
  CHECK(fit["metadata"]["version"] == kVersion);

  const auto rows = read_csv(dir / "out" / "hazard.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0][2] == "Lambda");
  const auto na = oracle::nelson_aalen({0.2, 0.5, 0.9}, {1, 1, 0});
  REQUIRE(na.size() == 2);
  for (size_t k = 0; k < 2; ++k) {
    CHECK(std::stod(rows[k + 1][0]) == na[k].first);
    CHECK(std::stod(rows[k + 1][2]) == na[k].second);
  }
  CHECK(std::stod(rows[1][2]) == 1.0 / 3.0);
  CHECK(std::stod(rows[2][2]) == 1.0 / 3.0 + 1.0 / 2.0);

  const auto again = run("fit --input " + (dir / "d1.csv").string() + " --output-dir " +
                         (dir / "again").string() + " --gamma " + format_double(u0));
  CHECK(again.code == 0);
  CHECK(slurp(dir / "out" / "fit.json") == slurp(dir / "again" / "fit.json"));
  CHECK(slurp(dir / "out" / "hazard.csv") == slurp(dir / "again" / "hazard.csv"));
}

TEST_CASE("missing input file") {
  const fs::path dir = scratch("missing");
  const std::string path = (dir / "nope.csv").string();
  const auto r = run("fit --input " + path + " --output-dir " + dir.string());
  CHECK(r.code == 1);
  CHECK(r.err.find(path) != std::string::npos);
  CHECK(run("fit").code == 1);
  CHECK(run("frobnicate").code == 1);
}

TEST_CASE("malformed CSV reports the row") {
  const fs::path dir = scratch("badcsv");
  write_text_file((dir / "bad.csv").string(), "time,status,z1\n0.5,1,0\n0.7,2,1\n");
  const auto r = run("fit --input " + (dir / "bad.csv").string() + " --output-dir " + dir.string());
  CHECK(r.code == 1);
  CHECK(r.err.find("row 2") != std::string::npos);
  CHECK(r.err.find("status") != std::string::npos);
}

TEST_CASE("smoke fixture recovers the true support") {
  const fs::path dir = scratch("smoke");
  const auto truth = Json::parse(slurp(kData + "/smoke_truth.json"));
  const auto r = run("fit --input " + kData + "/smoke.csv --output-dir " + dir.string());
  REQUIRE(r.code == 0);
  const auto fit = Json::parse(slurp(dir / "fit.json"));
  CHECK(fit["support"] == truth["truth"]["support"]);
  CHECK(fit["refit"]["converged"] == true);
  CHECK(fit["refit"]["wald_intervals"].size() == truth["truth"]["support"].size());

  const auto std_run = run("fit --standardize --total-variance --input " + kData +
                           "/smoke.csv --output-dir " + (dir / "std").string());
  CHECK(std_run.code == 0);
  const auto rows = read_csv(dir / "std" / "hazard.csv");
  REQUIRE(rows.size() > 1);
  CHECK(rows[0].size() == 9);
}

TEST_CASE("simulate is deterministic per seed") {
  const fs::path dir = scratch("sim");
  const std::string args = "simulate --n 80 --p 6 --seed 5 --censoring uniform --output-dir ";
  REQUIRE(run(args + (dir / "a").string()).code == 0);
  REQUIRE(run(args + (dir / "b").string()).code == 0);
  CHECK(slurp(dir / "a" / "data.csv") == slurp(dir / "b" / "data.csv"));
  CHECK(slurp(dir / "a" / "truth.json") == slurp(dir / "b" / "truth.json"));
  REQUIRE(run("simulate --n 80 --p 6 --seed 6 --censoring uniform --output-dir " +
              (dir / "c").string()).code == 0);
  CHECK(slurp(dir / "a" / "data.csv") != slurp(dir / "c" / "data.csv"));

  CHECK(run("simulate --n 0 --output-dir " + (dir / "z").string()).code == 1);
  CHECK(run("simulate --baseline gompertz --output-dir " + (dir / "z").string()).code == 1);
}

TEST_CASE("simulated event rate in truth record") {
  const fs::path dir = scratch("rate");
  REQUIRE(run("simulate --n 10000 --p 1 --sparsity 0 --rate 1 --seed 99 --output-dir " +
              dir.string()).code == 0);
  const auto truth = Json::parse(slurp(dir / "truth.json"));
  CHECK(std::abs(truth["truth"]["event_rate"].get<double>() - (1.0 - std::exp(-1.0))) <= 0.02);
}

TEST_CASE("bundled quick study and thread reproducibility") {
  const fs::path dir = scratch("mc");
  const auto t0 = std::chrono::steady_clock::now();
  const auto a = run("mc --config " + kStudies + "/quick.study --threads 1 --output-dir " +
                     (dir / "t1").string());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  REQUIRE(a.code == 0);
  MESSAGE("quick.study single-threaded: " << secs << " s");
  CHECK(secs < 60.0);
  CHECK(a.out.find("selection=") != std::string::npos);
  CHECK(a.out.find("max_ks=") != std::string::npos);
  CHECK(a.out.find("hazard_coverage@0.5=") != std::string::npos);

  const auto b = run("mc --config " + kStudies + "/quick.study --threads 4 --output-dir " +
                     (dir / "t4").string());
  REQUIRE(b.code == 0);
  CHECK(slurp(dir / "t1" / "report.json") == slurp(dir / "t4" / "report.json"));
  CHECK(slurp(dir / "t1" / "report.csv") == slurp(dir / "t4" / "report.csv"));
  const auto rep = Json::parse(slurp(dir / "t1" / "report.json"));
  CHECK(rep["metadata"]["seed"] == 7);
  CHECK(rep["grid"].size() == 1);
  CHECK(read_csv(dir / "t1" / "report.csv").size() == 2);
}

TEST_CASE("study config errors") {
  const fs::path dir = scratch("badcfg");
  write_text_file((dir / "no_n.study").string(), "[study]\nreplicates = 2\n[generator]\np = 10\n");
  const auto r = run("mc --config " + (dir / "no_n.study").string() + " --output-dir " +
                     dir.string());
  CHECK(r.code == 1);
  CHECK(r.err.find("'n'") != std::string::npos);
  write_text_file((dir / "typo.study").string(), "[generator]\nn = 10\np = 10\nsparsty = 2\n");
  const auto t = run("mc --config " + (dir / "typo.study").string() + " --output-dir " +
                     dir.string());
  CHECK(t.code == 1);
  CHECK(t.err.find("line 4") != std::string::npos);
}

TEST_CASE("diagnose") {
  const auto self = run("diagnose --self-test");
  CHECK(self.code == 0);
  CHECK(self.out == "kappa=1\n");

  const fs::path dir = scratch("diag");
  REQUIRE(run("fit --input " + kData + "/smoke.csv --output-dir " + (dir / "fit").string()).code == 0);
  const auto d = run("diagnose --input " + kData + "/smoke.csv --fit-dir " +
                     (dir / "fit").string() + " --output-dir " + (dir / "diag").string());
  REQUIRE(d.code == 0);
  const auto j = Json::parse(slurp(dir / "diag" / "diagnostics.json"));
  CHECK(std::abs(j["residuals"]["sum"].get<double>()) <= 1e-10);
  CHECK(j["kappa"]["value"].get<double>() > 0.0);
  CHECK(j["metadata"].contains("settings_hash"));

  CHECK(run("diagnose --input " + kData + "/smoke.csv --fit-dir " + (dir / "none").string() +
            " --output-dir " + (dir / "diag").string()).code == 1);

  // A hand-written fit with 13 selected coordinates.
  REQUIRE(run("simulate --n 60 --p 16 --seed 3 --output-dir " + (dir / "wide").string()).code == 0);
  Json fit;
  fit["metadata"] = metadata_block(0, Json::object());
  fit["gamma"] = 0.1;
  std::vector<Index> support;
  for (Index k = 0; k < 13; ++k) support.push_back(k);
  fit["support"] = support;
  fit["refit"]["beta2"] = std::vector<double>(16, 0.0);
  fit["dantzig"]["beta_hat"] = std::vector<double>(16, 0.0);
  write_text_file((dir / "wide" / "fit.json").string(), dump_json(fit));
  const auto big = run("diagnose --method exact --input " + (dir / "wide" / "data.csv").string() +
                       " --fit-dir " + (dir / "wide").string() + " --output-dir " +
                       (dir / "wide_diag").string());
  CHECK(big.code == 1);
  CHECK(big.err.find("sampled") != std::string::npos);
  const auto sampled = run("diagnose --method sampled --input " +
                           (dir / "wide" / "data.csv").string() + " --fit-dir " +
                           (dir / "wide").string() + " --output-dir " + (dir / "wide_diag").string());
  CHECK(sampled.code == 0);
}
