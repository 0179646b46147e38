// Copyright 2026 The loopqpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "loopqpc_cli.hpp"

namespace fs = std::filesystem;
using namespace loopqpc;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "loopqpc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() / ("loopqpc_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& s) const { return path_ / s; }
  std::string str() const { return path_.string(); }

 private:
  fs::path path_;
};

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) rows.push_back(io::split_csv_line(line));
  return rows;
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

std::string slurp(const fs::path& p) { return io::read_text(p.string()); }

}  // namespace

TEST_CASE("simulate writes theory, chip and counting tables", "[cli]") {
  TempDir dir;
  const auto r = run_cli({"--out", dir.str(), "simulate"});
  REQUIRE(r.code == 0);
  const auto theory = read_csv(dir / "theory.csv");
  const auto chip = read_csv(dir / "chip.csv");
  REQUIRE(theory.size() == 19);
  REQUIRE(chip.size() == 19);
  CHECK(theory[0] == std::vector<std::string>{"step", "channel", "prob"});
  for (std::size_t i = 1; i < theory.size(); ++i) CHECK(std::abs(std::stod(theory[i][2]) - std::stod(chip[i][2])) < 1e-9);
  const auto mc = read_csv(dir / "mc.csv");
  CHECK(mc[0] == std::vector<std::string>{"step", "channel", "p_hat", "stderr"});
  CHECK(mc.size() == 19);
}

TEST_CASE("simulate variants", "[cli]") {
  TempDir dir;
  auto r = run_cli({"--out", dir.str(), "simulate", "--identity-mesh", "--n-steps", "1", "--initial", "2"});
  REQUIRE(r.code == 0);
  for (const auto* name : {"theory.csv", "chip.csv"}) {
    const auto rows = read_csv(dir / name);
    REQUIRE(rows.size() == 7);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::stod(rows[i][2]) == (rows[i][1] == "2" ? 1.0 : 0.0));
  }
  r = run_cli({"--out", dir.str(), "simulate", "--epsilon", "0.5", "--lambda", "0.8", "--omega", "1.2"});
  REQUIRE(r.code == 0);
  CHECK(read_csv(dir / "chip.csv").size() == 19);
  CHECK(run_cli({"--out", dir.str(), "simulate", "--initial", "6"}).code == 2);
}

TEST_CASE("decompose", "[cli]") {
  TempDir dir;
  auto r = run_cli({"--out", dir.str(), "decompose"});
  REQUIRE(r.code == 0);
  const auto plan = io::plan_from_json(slurp(dir / "plan.json"));
  CHECK(plan.cells.size() == 15);
  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(report.at("frobenius_error").get<double>() < 1e-9);

  write(dir / "id.json", io::matrix_to_json(CMatrix::Identity(4, 4)));
  r = run_cli({"--out", dir.str(), "decompose", "--unitary", (dir / "id.json").string()});
  REQUIRE(r.code == 0);
  CHECK(io::plan_from_json(slurp(dir / "plan.json")) == zero_plan(4));

  write(dir / "bad.json", R"({"re": [[1, 0.2], [0, 1]], "im": [[0, 0], [0, 0]]})");
  r = run_cli({"--out", dir.str(), "decompose", "--unitary", (dir / "bad.json").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("not unitary") != std::string::npos);
}

TEST_CASE("losses and scaling", "[cli]") {
  TempDir dir;
  auto r = run_cli({"--out", dir.str(), "losses"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("n=3: loop ratio 0.666667") != std::string::npos);
  CHECK(r.out.find("(2/3)") != std::string::npos);
  const auto rows = read_csv(dir / "losses.csv");
  REQUIRE(rows.size() == 13);
  std::map<std::pair<std::string, int>, double> loss;
  for (std::size_t i = 1; i < rows.size(); ++i) loss[{rows[i][0], std::stoi(rows[i][1])}] = std::stod(rows[i][2]);
  for (int n = 1; n <= 3; ++n) {
    for (const auto* other : {"SOI", "LNOI", "SiN-offchip"}) CHECK(loss[{"SiN", n}] <= loss[{other, n}]);
  }

  r = run_cli({"--out", dir.str(), "losses", "--platform", "SiN,GaAs"});
  CHECK(r.code == 2);
  CHECK(r.err.find("unknown platform") != std::string::npos);
  CHECK(run_cli({"--out", dir.str(), "scaling", "--platform", "GaAs"}).code == 2);

  r = run_cli({"--out", dir.str(), "scaling"});
  REQUIRE(r.code == 0);
  const auto scaling = read_csv(dir / "scaling.csv");
  REQUIRE(scaling.size() == 5);
  CHECK(scaling[0] == std::vector<std::string>{"modes", "loss_db"});
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 1; i < scaling.size(); ++i) {
    xs.push_back(std::stod(scaling[i][0]));
    ys.push_back(std::stod(scaling[i][1]));
  }
  CHECK(linear_fit(xs, ys).r_squared > 0.999);
  CHECK(run_cli({"--out", dir.str(), "scaling", "--modes", "3,4"}).code == 2);
}

TEST_CASE("compare and train", "[cli]") {
  TempDir dir;
  auto r = run_cli({"--out", dir.str(), "compare", "--zero-noise"});
  REQUIRE(r.code == 0);
  const auto summary = read_csv(dir / "summary.csv");
  REQUIRE(summary.size() == 2);
  CHECK(summary[1][3] == "undefined");
  const auto errors = read_csv(dir / "errors.csv");
  CHECK(errors.size() == 121);
  for (std::size_t i = 1; i < errors.size(); ++i) CHECK(std::stod(errors[i][3]) < 1e-8);

  std::ostringstream short_table;
  short_table << "epsilon,omega_hbar,lambda\n";
  for (int i = 0; i < 19; ++i) short_table << "1,1,1\n";
  write(dir / "short.csv", short_table.str());
  r = run_cli({"--out", dir.str(), "compare", "--table", (dir / "short.csv").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("expected 20 rows") != std::string::npos);

  write(dir / "quick.json", R"({"training": {"max_iters": 3}, "n_steps": 2})");
  r = run_cli({"--config", (dir / "quick.json").string(), "--out", dir.str(), "--seed", "4", "compare"});
  REQUIRE(r.code == 0);
  CHECK(read_csv(dir / "summary.csv")[1][6] == "20");

  r = run_cli({"--out", dir.str(), "train", "--zero-noise"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("train: 0 iterations") != std::string::npos);
  CHECK(read_csv(dir / "trace.csv").size() == 2);
  r = run_cli({"--config", (dir / "quick.json").string(), "--out", dir.str(), "train"});
  REQUIRE(r.code == 0);
  CHECK(read_csv(dir / "trace.csv").size() == 5);
  CHECK(read_csv(dir / "errors.csv").size() == 5);
}

TEST_CASE("counts", "[cli]") {
  TempDir dir;
  const auto r = run_cli({"--out", dir.str(), "--seed", "9", "counts", "--identity-mesh"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("separated=yes") != std::string::npos);
  const std::string first = slurp(dir / "histograms.csv");
  REQUIRE(run_cli({"--out", dir.str(), "--seed", "9", "counts", "--identity-mesh"}).code == 0);
  CHECK(slurp(dir / "histograms.csv") == first);
  REQUIRE(run_cli({"--out", dir.str(), "--seed", "10", "counts", "--identity-mesh"}).code == 0);
  CHECK(slurp(dir / "histograms.csv") != first);
  CHECK(read_csv(dir / "estimates.csv").size() == 19);
}

TEST_CASE("configuration file and overrides", "[cli]") {
  TempDir dir;
  write(dir / "cfg.json", R"({"model": {"epsilon": 0.3}, "noise": {"sigma_theta": 0.02}, "platform": "LNOI"})");
  auto r = run_cli({"--config", (dir / "cfg.json").string(), "--dump-config", "simulate", "--epsilon", "0.7"});
  REQUIRE(r.code == 0);
  const auto dumped = nlohmann::json::parse(r.out);
  CHECK(dumped["model"]["epsilon"] == 0.7);
  CHECK(dumped["noise"]["sigma_theta"] == 0.02);
  CHECK(dumped["platform"] == "LNOI");

  // The echoed configuration reloads to the same configuration and run.
  write(dir / "echo.json", r.out);
  const auto again = run_cli({"--config", (dir / "echo.json").string(), "--dump-config", "simulate"});
  CHECK(again.out == r.out);

  const auto out_a = (dir / "a").string();
  const auto out_b = (dir / "b").string();
  REQUIRE(run_cli({"--config", (dir / "cfg.json").string(), "--out", out_a, "simulate", "--epsilon", "0.7"}).code == 0);
  REQUIRE(run_cli({"--config", (dir / "echo.json").string(), "--out", out_b, "simulate"}).code == 0);
  for (const auto* f : {"theory.csv", "chip.csv", "mc.csv", "histograms.csv"}) {
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }

  write(dir / "badplat.json", R"({"platform": "GaAs"})");
  CHECK(run_cli({"--config", (dir / "badplat.json").string(), "losses"}).code == 2);
  write(dir / "broken.json", "{ nope");
  CHECK(run_cli({"--config", (dir / "broken.json").string(), "losses"}).code == 2);
  write(dir / "wrongtype.json", R"({"n_steps": "three"})");
  CHECK(run_cli({"--config", (dir / "wrongtype.json").string(), "losses"}).code == 2);
}

TEST_CASE("output stays inside the output directory", "[cli]") {
  TempDir dir;
  const auto out = dir / "nested" / "run";
  REQUIRE(run_cli({"--out", out.string(), "counts"}).code == 0);
  std::size_t outside = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir.str())) {
    if (e.is_regular_file() && e.path().parent_path() != out) ++outside;
  }
  CHECK(outside == 0);
}

TEST_CASE("usage errors", "[cli]") {
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"frobnicate"}).code == 2);
  CHECK(run_cli({"simulate", "--no-such-flag"}).code == 2);
  CHECK(run_cli({"--config", "/nonexistent.json", "simulate"}).code == 2);
  CHECK(run_cli({"--help"}).code == 0);
}
