// End-to-end exercises of the command-line tool. The binary path comes from
// the SLOPESCREEN_BIN environment variable (set by ctest).

#include "helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace slopescreen;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cli_path() {
  const char* bin = std::getenv("SLOPESCREEN_BIN");
  REQUIRE(bin != nullptr);
  return bin;
}

struct Run {
  int exit_code;
  std::string stdout_text;
};

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("slopescreen_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

Run run_cli(const TempDir& dir, const std::string& args) {
  std::string out_file = dir.file("stdout.txt");
  std::string cmd = cli_path() + " " + args + " > " + out_file + " 2> " + dir.file("stderr.txt");
  int status = std::system(cmd.c_str());
  int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_file);
  std::stringstream ss;
  ss << in.rdbuf();
  return Run{code, ss.str()};
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  json j;
  in >> j;
  return j;
}

json strip_times(json j) {
  for (auto& row : j["trace"]) row.erase("time_s");
  return j;
}

}  // namespace

TEST_CASE("gen / solve round trip is reproducible") {
  TempDir dir;
  Run gen = run_cli(dir, "gen --kind gaussian --m 25 --n 60 --seed 3 --dict-out " +
                             dir.file("A.csv") + " --obs-out " + dir.file("y.csv"));
  REQUIRE(gen.exit_code == 0);
  CHECK(json::parse(gen.stdout_text)["command"] == "gen");

  std::string solve_args = "solve --dict " + dir.file("A.csv") + " --obs " + dir.file("y.csv") +
                           " --lambda-ratio 0.5 --oscar-wlast 0.1 --gap-tol 1e-9"
                           " --screen all --screen-every 20 --out ";
  Run s1 = run_cli(dir, solve_args + dir.file("r1.json"));
  REQUIRE(s1.exit_code == 0);
  json summary = json::parse(s1.stdout_text);
  CHECK(summary["gap"].get<double>() <= 1e-9);
  CHECK(summary["exit_reason"] == "tolerance");

  Run s2 = run_cli(dir, solve_args + dir.file("r2.json"));
  REQUIRE(s2.exit_code == 0);
  CHECK(strip_times(read_json(dir.file("r1.json"))) ==
        strip_times(read_json(dir.file("r2.json"))));
}

TEST_CASE("CLI outputs are parseable by the library readers") {
  TempDir dir;
  REQUIRE(run_cli(dir, "gen --kind toeplitz --m 20 --n 35 --seed 5 --dict-out " +
                           dir.file("A.csv") + " --obs-out " + dir.file("y.csv"))
              .exit_code == 0);
  MatrixXd a = io::read_matrix_csv(dir.file("A.csv"));
  CHECK(a.rows() == 20);
  CHECK(a.cols() == 35);
  VectorXd y = io::read_vector_csv(dir.file("y.csv"));
  CHECK(std::abs(y.norm() - 1.0) <= 1e-12);
}

TEST_CASE("screen subcommand matches the library call") {
  TempDir dir;
  REQUIRE(run_cli(dir, "gen --kind gaussian --m 20 --n 45 --seed 9 --dict-out " +
                           dir.file("A.csv") + " --obs-out " + dir.file("y.csv"))
              .exit_code == 0);
  Run sc = run_cli(dir, "screen --dict " + dir.file("A.csv") + " --obs " + dir.file("y.csv") +
                            " --lambda-ratio 0.5 --oscar-wlast 0.5 --strategy all --r0 0 --out " +
                            dir.file("screen.json"));
  REQUIRE(sc.exit_code == 0);
  json report = read_json(dir.file("screen.json"));

  // same computation through the library
  Dictionary a = Dictionary::normalized(io::read_matrix_csv(dir.file("A.csv")));
  VectorXd y = io::read_vector_csv(dir.file("y.csv"));
  Weights w = bench::oscar_weights(45, 0.5);
  double lambda = 0.5 * lambda_max(a, y, w);
  ProblemInstance p(a, y, lambda, w);
  DualPoint u = make_dual_point(p, VectorXd::Zero(45));
  SafeSphere sphere = make_gap_sphere(p, VectorXd::Zero(45), u);
  ScreenOutcome out = screen(p.dict(), sphere, lambda, w, Strategy::all_fast);

  CHECK(report["screened"].get<std::vector<int>>() == out.screened);
  CHECK(report["n"] == 45);
}

TEST_CASE("profile subcommand reproduces the counting example") {
  TempDir dir;
  {
    std::ofstream out(dir.file("bench.csv"));
    out << "trial,solver,final_gap,wall_time_s\n";
    out << "0,PG-no,1e-09,0.1\n";
    out << "1,PG-no,1e-07,0.1\n";
  }
  Run pr = run_cli(dir, "profile --in " + dir.file("bench.csv") + " --out " +
                            dir.file("profile.csv") +
                            " --delta-min 1e-10 --delta-max 1e-6 --delta-count 3");
  REQUIRE(pr.exit_code == 0);
  std::ifstream in(dir.file("profile.csv"));
  std::string header;
  std::getline(in, header);
  CHECK(header == "delta,solver,rho");
  std::vector<std::string> rows;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) rows.push_back(line);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].find("PG-no,0") != std::string::npos);   // delta below both gaps
  CHECK(rows[1].find("PG-no,50") != std::string::npos);  // delta = 1e-8: one of two
  CHECK(rows[2].find("PG-no,100") != std::string::npos);
}

TEST_CASE("small detection experiment through the CLI") {
  TempDir dir;
  Run det = run_cli(dir,
                    "detect --kind gaussian --m 20 --n 40 --oscar-wlast 0.9 --lambda-ratio 0.5"
                    " --trials 2 --seed 1 --jobs 2 --r0-min 1e-4 --r0-max 1e-1 --r0-count 3"
                    " --out " + dir.file("detect.csv"));
  REQUIRE(det.exit_code == 0);
  std::ifstream in(dir.file("detect.csv"));
  std::string header;
  std::getline(in, header);
  CHECK(header == "trial,r0,strategy,detection_pct");
  int lines = 0;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) ++lines;
  CHECK(lines == 2 * 4 * 3);  // trials x grid(zero + 3) x strategies
}

TEST_CASE("argument and guard errors use distinct exit codes") {
  TempDir dir;
  // missing input file
  Run missing = run_cli(dir, "solve --dict " + dir.file("nope.csv") + " --obs " +
                                 dir.file("nope2.csv") + " --oscar-wlast 0.5");
  CHECK(missing.exit_code == 2);

  // unknown flag
  CHECK(run_cli(dir, "solve --frobnicate").exit_code == 2);
  // no subcommand
  CHECK(run_cli(dir, "").exit_code == 2);

  // zero weights + per-rank scaling: numerical guard, exit 3
  REQUIRE(run_cli(dir, "gen --kind gaussian --m 10 --n 8 --seed 2 --dict-out " +
                           dir.file("A.csv") + " --obs-out " + dir.file("y.csv"))
              .exit_code == 0);
  VectorXd wz(8);
  for (int k = 0; k < 8; ++k) wz[k] = k < 5 ? 1.0 : 0.0;
  io::write_vector_csv(dir.file("w.csv"), wz);
  Run guard = run_cli(dir, "solve --dict " + dir.file("A.csv") + " --obs " + dir.file("y.csv") +
                               " --lambda-ratio 0.5 --weights-file " + dir.file("w.csv") +
                               " --screen rq --scaling max --gap-tol 1e-6 --out " +
                               dir.file("r.json"));
  CHECK(guard.exit_code == 3);
}
