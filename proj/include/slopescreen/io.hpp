#pragma once

// File formats shared project-wide. Matrices and vectors travel as text
// CSV whose first line is `# m n` (matrix) or `# n` (vector), followed by
// comma-separated decimal values row by row, parsed as 64-bit floats.
// Experiment tables are plain CSV with fixed headers. Writes are atomic
// (temp file in the target directory, then rename).

#include "slopescreen/bench.hpp"
#include "slopescreen/screening.hpp"
#include "slopescreen/solver.hpp"

#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace slopescreen::io {

using nlohmann::json;

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path dir = target.parent_path();
  fs::path tmp = (dir.empty() ? fs::path(".") : dir) / (target.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

inline std::string matrix_to_csv(const MatrixXd& a) {
  std::ostringstream out;
  out << "# " << a.rows() << " " << a.cols() << "\n";
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (j > 0) out << ",";
      out << format_double(a(i, j));
    }
    out << "\n";
  }
  return out.str();
}

inline std::string vector_to_csv(const VectorXd& v) {
  std::ostringstream out;
  out << "# " << v.size() << "\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) out << format_double(v[i]) << "\n";
  return out.str();
}

inline void write_matrix_csv(const std::string& path, const MatrixXd& a) {
  atomic_write(path, matrix_to_csv(a));
}

inline void write_vector_csv(const std::string& path, const VectorXd& v) {
  atomic_write(path, vector_to_csv(v));
}

namespace detail {

struct CsvData {
  std::vector<long> header_dims;
  std::vector<double> values;
};

inline CsvData read_csv_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  CsvData data;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      first = false;
      std::istringstream hs(line);
      std::string hash;
      hs >> hash;
      if (hash != "#") throw std::runtime_error("missing `# dims` header line: " + path);
      long d;
      while (hs >> d) data.header_dims.push_back(d);
      if (data.header_dims.empty() || data.header_dims.size() > 2)
        throw std::runtime_error("malformed header in " + path);
      continue;
    }
    std::size_t pos = 0;
    while (pos < line.size()) {
      std::size_t comma = line.find(',', pos);
      std::string tok = line.substr(pos, comma == std::string::npos ? comma : comma - pos);
      if (!tok.empty() && tok.find_first_not_of(" \t\r") != std::string::npos) {
        try {
          data.values.push_back(std::stod(tok));
        } catch (const std::exception&) {
          throw std::runtime_error("bad numeric value '" + tok + "' in " + path);
        }
      }
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  if (first) throw std::runtime_error("empty file: " + path);
  return data;
}

}  // namespace detail

inline MatrixXd read_matrix_csv(const std::string& path) {
  detail::CsvData data = detail::read_csv_values(path);
  if (data.header_dims.size() != 2)
    throw std::runtime_error("expected matrix header `# m n` in " + path);
  long m = data.header_dims[0], n = data.header_dims[1];
  if (m <= 0 || n <= 0 || static_cast<long>(data.values.size()) != m * n)
    throw std::runtime_error("value count does not match header in " + path);
  MatrixXd a(m, n);
  for (long i = 0; i < m; ++i)
    for (long j = 0; j < n; ++j) a(i, j) = data.values[static_cast<std::size_t>(i * n + j)];
  return a;
}

inline VectorXd read_vector_csv(const std::string& path) {
  detail::CsvData data = detail::read_csv_values(path);
  if (data.header_dims.size() != 1)
    throw std::runtime_error("expected vector header `# n` in " + path);
  long n = data.header_dims[0];
  if (n <= 0 || static_cast<long>(data.values.size()) != n)
    throw std::runtime_error("value count does not match header in " + path);
  VectorXd v(n);
  for (long i = 0; i < n; ++i) v[i] = data.values[static_cast<std::size_t>(i)];
  return v;
}

// --- experiment tables ---------------------------------------------------

inline std::string detection_csv(const std::vector<bench::DetectionRow>& rows) {
  std::ostringstream out;
  out << "trial,r0,strategy,detection_pct\n";
  for (const auto& r : rows)
    out << r.trial << "," << format_double(r.r0) << "," << strategy_name(r.strategy) << ","
        << format_double(r.detection_pct) << "\n";
  return out.str();
}

inline std::string bench_csv(const std::vector<bench::BenchRow>& rows) {
  std::ostringstream out;
  out << "trial,solver,final_gap,wall_time_s\n";
  for (const auto& r : rows)
    out << r.trial << "," << bench::solver_name(r.solver) << "," << format_double(r.final_gap)
        << "," << format_double(r.wall_time_s) << "\n";
  return out.str();
}

inline std::string profile_csv(const std::vector<bench::ProfileRow>& rows) {
  std::ostringstream out;
  out << "delta,solver,rho\n";
  for (const auto& r : rows)
    out << format_double(r.delta) << "," << bench::solver_name(r.solver) << ","
        << format_double(r.rho) << "\n";
  return out.str();
}

inline bench::SolverKind parse_solver_name(const std::string& name) {
  for (bench::SolverKind k : {bench::SolverKind::pg_no, bench::SolverKind::pg_rq,
                              bench::SolverKind::pg_bao, bench::SolverKind::pg_all})
    if (name == bench::solver_name(k)) return k;
  throw std::runtime_error("unknown solver name: " + name);
}

/// Reads back a benchmark CSV written by bench_csv.
inline std::vector<bench::BenchRow> read_bench_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("trial,solver,final_gap", 0) != 0)
    throw std::runtime_error("missing benchmark CSV header in " + path);
  std::vector<bench::BenchRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string trial_s, solver_s, gap_s, wall_s;
    if (!std::getline(ls, trial_s, ',') || !std::getline(ls, solver_s, ',') ||
        !std::getline(ls, gap_s, ',') || !std::getline(ls, wall_s))
      throw std::runtime_error("malformed benchmark row in " + path);
    rows.push_back(bench::BenchRow{std::stoi(trial_s), parse_solver_name(solver_s),
                                   std::stod(gap_s), std::stod(wall_s)});
  }
  return rows;
}

// --- JSON ----------------------------------------------------------------

inline json screen_outcome_to_json(const ScreenOutcome& out, double radius) {
  return json{{"strategy", strategy_name(out.strategy)},
              {"screened", out.screened},
              {"n", out.sorted.size()},
              {"radius", radius},
              {"thresholds_visited", out.thresholds_visited}};
}

inline json solve_result_to_json(const SolveResult& res) {
  json trace = json::array();
  for (const TraceRow& row : res.trace)
    trace.push_back(json{{"time_s", row.wall_time_s},
                         {"iter", row.iteration},
                         {"gap", row.gap},
                         {"dim", row.active_dimension}});
  std::vector<double> x(res.x.data(), res.x.data() + res.x.size());
  return json{{"x", x},
              {"gap", res.gap},
              {"iterations", res.iterations},
              {"screened", res.screened},
              {"screened_total", res.screened_total},
              {"exit_reason", exit_reason_name(res.exit_reason)},
              {"trace", trace}};
}

inline bench::DictKind parse_dict_kind(const std::string& s) {
  if (s == "gaussian") return bench::DictKind::gaussian;
  if (s == "uniform") return bench::DictKind::uniform;
  if (s == "toeplitz") return bench::DictKind::toeplitz;
  throw std::runtime_error("unknown dictionary kind: " + s);
}

/// Experiment config from JSON; field names mirror the struct in
/// snake_case. Absent fields keep their defaults.
inline bench::ExperimentConfig config_from_json(const json& j) {
  bench::ExperimentConfig cfg;
  if (j.contains("dict_kind")) cfg.dict_kind = parse_dict_kind(j["dict_kind"].get<std::string>());
  if (j.contains("m")) cfg.m = j["m"].get<int>();
  if (j.contains("n")) cfg.n = j["n"].get<int>();
  if (j.contains("oscar_w_last")) cfg.oscar_w_last = j["oscar_w_last"].get<double>();
  if (j.contains("lambda_ratio")) cfg.lambda_ratio = j["lambda_ratio"].get<double>();
  if (j.contains("trials")) cfg.trials = j["trials"].get<int>();
  if (j.contains("master_seed")) cfg.master_seed = j["master_seed"].get<std::uint64_t>();
  if (j.contains("r0_grid")) cfg.r0_grid = j["r0_grid"].get<std::vector<double>>();
  if (j.contains("time_budget_s")) cfg.time_budget_s = j["time_budget_s"].get<double>();
  if (j.contains("toeplitz_width")) cfg.toeplitz_width = j["toeplitz_width"].get<double>();
  if (j.contains("jobs")) cfg.jobs = j["jobs"].get<int>();
  if (j.contains("timing_repeats")) cfg.timing_repeats = j["timing_repeats"].get<int>();
  if (j.contains("solvers")) {
    cfg.solvers.clear();
    for (const auto& name : j["solvers"]) cfg.solvers.push_back(parse_solver_name(name.get<std::string>()));
  }
  return cfg;
}

}  // namespace slopescreen::io
