// Command-line surface: instance generation, single solves, one-shot
// screening reports, the detection and budget experiments, and performance
// profiles. Outputs are written atomically; a one-line JSON summary goes to
// stdout. Exit codes: 0 success, 2 argument/file errors, 3 numerical-guard
// errors.

#include "slopescreen/slopescreen.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <thread>

namespace fs = std::filesystem;
using namespace slopescreen;
using nlohmann::json;

namespace {

void require_readable(const std::string& path) {
  if (!fs::exists(path)) throw std::runtime_error("input file not found: " + path);
}

void require_writable_dir(const std::string& path) {
  fs::path parent = fs::path(path).parent_path();
  if (!parent.empty() && !fs::is_directory(parent))
    throw std::runtime_error("output directory does not exist: " + parent.string());
}

int effective_jobs(int requested) {
  int jobs = std::max(1, requested);
  if (const char* cap = std::getenv("SLOPE_SCREEN_THREADS")) {
    int limit = std::atoi(cap);
    if (limit >= 1) jobs = std::min(jobs, limit);
  }
  return jobs;
}

struct InstanceArgs {
  std::string dict_path;
  std::string obs_path;
  double lambda_ratio = 0.5;
  double lambda_abs = -1.0;  // >0 overrides the ratio
  double oscar_w_last = -1.0;
  std::string weights_path;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--dict", dict_path, "dictionary CSV (`# m n` header)")->required();
    cmd->add_option("--obs", obs_path, "observation CSV (`# n` header)")->required();
    cmd->add_option("--lambda-ratio", lambda_ratio,
                    "regularization level as a fraction of lambda_max (default 0.5)");
    cmd->add_option("--lambda", lambda_abs, "absolute regularization level (overrides the ratio)");
    auto* wl = cmd->add_option("--oscar-wlast", oscar_w_last,
                               "smallest weight of the arithmetic weight family, in (0, 1]");
    auto* wf = cmd->add_option("--weights-file", weights_path, "explicit weights CSV");
    wl->excludes(wf);
    wf->excludes(wl);
  }

  ProblemInstance load() const {
    require_readable(dict_path);
    require_readable(obs_path);
    if (!weights_path.empty()) require_readable(weights_path);
    Dictionary a = Dictionary::normalized(io::read_matrix_csv(dict_path));
    VectorXd y = io::read_vector_csv(obs_path);
    Weights w = !weights_path.empty()
                    ? Weights(io::read_vector_csv(weights_path))
                    : (oscar_w_last > 0.0
                           ? bench::oscar_weights(a.cols(), oscar_w_last)
                           : throw std::runtime_error("need --oscar-wlast or --weights-file"));
    double lambda = lambda_abs > 0.0 ? lambda_abs : lambda_ratio * lambda_max(a, y, w);
    if (lambda <= 0.0) throw std::runtime_error("nonpositive lambda (observation in kernel?)");
    return ProblemInstance(std::move(a), std::move(y), lambda, std::move(w));
  }
};

ScreenStrategy parse_screen_strategy(const std::string& s) {
  if (s == "none") return ScreenStrategy::none;
  if (s == "r1") return ScreenStrategy::r1;
  if (s == "rq") return ScreenStrategy::rq;
  if (s == "all") return ScreenStrategy::all;
  throw std::runtime_error("unknown screening strategy: " + s);
}

Strategy parse_oneshot_strategy(const std::string& s) {
  if (s == "r1") return Strategy::r1;
  if (s == "rq") return Strategy::rq;
  if (s == "all") return Strategy::all_fast;
  if (s == "brute") return Strategy::all_brute;
  throw std::runtime_error("unknown screening strategy: " + s);
}

void print_summary(const json& j) { std::cout << j.dump() << std::endl; }

struct ExperimentArgs {
  std::string config_path;
  std::string kind = "gaussian";
  int m = 100, n = 300;
  double oscar_w_last = 0.9;
  double lambda_ratio = 0.5;
  int trials = 50;
  std::uint64_t seed = 0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config (overrides the flags below)");
    cmd->add_option("--kind", kind, "dictionary kind: gaussian|uniform|toeplitz");
    cmd->add_option("--m", m, "observation dimension");
    cmd->add_option("--n", n, "number of atoms");
    cmd->add_option("--oscar-wlast", oscar_w_last, "smallest weight, in (0, 1]");
    cmd->add_option("--lambda-ratio", lambda_ratio, "lambda / lambda_max");
    cmd->add_option("--trials", trials, "number of trials");
    cmd->add_option("--seed", seed, "master seed");
  }

  bench::ExperimentConfig load() const {
    if (!config_path.empty()) {
      require_readable(config_path);
      std::ifstream in(config_path);
      json j;
      in >> j;
      return io::config_from_json(j);
    }
    bench::ExperimentConfig cfg;
    cfg.dict_kind = io::parse_dict_kind(kind);
    cfg.m = m;
    cfg.n = n;
    cfg.oscar_w_last = oscar_w_last;
    cfg.lambda_ratio = lambda_ratio;
    cfg.trials = trials;
    cfg.master_seed = seed;
    return cfg;
  }
};

int run(int argc, char** argv) {
  CLI::App app{"Sorted-L1 penalized least-squares solver with safe screening"};
  app.require_subcommand(1);

  // --- gen ---
  auto* gen = app.add_subcommand("gen", "generate a dictionary / observation pair");
  std::string gen_kind = "gaussian";
  int gen_m = 100, gen_n = 300;
  std::uint64_t gen_seed = 0;
  double gen_toeplitz_width = 0.0;
  std::string gen_dict_out = "A.csv", gen_obs_out = "y.csv";
  gen->add_option("--kind", gen_kind, "gaussian|uniform|toeplitz");
  gen->add_option("--m", gen_m, "rows");
  gen->add_option("--n", gen_n, "columns");
  gen->add_option("--seed", gen_seed, "seed");
  gen->add_option("--toeplitz-width", gen_toeplitz_width, "bump width (default m/20)");
  gen->add_option("--dict-out", gen_dict_out, "dictionary output path");
  gen->add_option("--obs-out", gen_obs_out, "observation output path");

  // --- solve ---
  auto* solve_cmd = app.add_subcommand("solve", "solve one instance");
  InstanceArgs solve_inst;
  solve_inst.add_to(solve_cmd);
  double gap_tol = 1e-9;
  long max_iters = 1000000;
  double time_budget = 0.0;
  std::string screen_opt = "none";
  int screen_every = 20;
  std::string scaling_opt = "full";
  double safety_margin = 0.0;
  bool trace_flag = false, verbose = false;
  std::string solve_out = "result.json";
  solve_cmd->add_option("--gap-tol", gap_tol, "stopping duality gap");
  solve_cmd->add_option("--max-iters", max_iters, "iteration cap");
  solve_cmd->add_option("--time-budget", time_budget, "wall-time budget in seconds");
  solve_cmd->add_option("--screen", screen_opt, "none|r1|rq|all");
  solve_cmd->add_option("--screen-every", screen_every, "screening cadence in iterations");
  solve_cmd->add_option("--scaling", scaling_opt, "dual scaling: full|max");
  solve_cmd->add_option("--safety-margin", safety_margin, "subtracted from every threshold");
  solve_cmd->add_flag("--trace", trace_flag, "record the full per-iteration trace");
  solve_cmd->add_flag("--verbose", verbose, "log one line per screening round");
  solve_cmd->add_option("--out", solve_out, "result JSON path");

  // --- screen ---
  auto* screen_cmd = app.add_subcommand("screen", "one-shot screening report");
  InstanceArgs screen_inst;
  screen_inst.add_to(screen_cmd);
  std::string strategy_opt = "all";
  std::string x_path, center_path;
  double r0 = 0.0, radius_opt = -1.0;
  double screen_margin = 0.0;
  std::string screen_scaling = "full";
  std::string screen_out = "screen.json";
  screen_cmd->add_option("--strategy", strategy_opt, "r1|rq|all|brute");
  auto* xo = screen_cmd->add_option("--x", x_path, "iterate CSV: sphere from its dual point");
  screen_cmd->add_option("--r0", r0, "radius inflation added to sqrt(2*gap)");
  auto* co = screen_cmd->add_option("--center", center_path, "explicit sphere center CSV");
  screen_cmd->add_option("--radius", radius_opt, "explicit sphere radius");
  screen_cmd->add_option("--scaling", screen_scaling, "dual scaling for --x: full|max");
  screen_cmd->add_option("--safety-margin", screen_margin, "subtracted from every threshold");
  screen_cmd->add_option("--out", screen_out, "report JSON path");
  xo->excludes(co);
  co->excludes(xo);

  // --- detect ---
  auto* detect_cmd = app.add_subcommand("detect", "detection-rate experiment");
  ExperimentArgs detect_args;
  detect_args.add_to(detect_cmd);
  int detect_jobs = 1;
  double r0_min = 1e-7, r0_max = 10.0;
  int r0_count = 33;
  bool r0_no_zero = false;
  std::string detect_out = "detect.csv";
  detect_cmd->add_option("--jobs", detect_jobs, "parallel trials");
  detect_cmd->add_option("--r0-min", r0_min, "smallest positive grid point");
  detect_cmd->add_option("--r0-max", r0_max, "largest grid point");
  detect_cmd->add_option("--r0-count", r0_count, "number of positive grid points");
  detect_cmd->add_flag("--r0-no-zero", r0_no_zero, "omit the r0 = 0 grid point");
  detect_cmd->add_option("--out", detect_out, "detection CSV path");

  // --- bench ---
  auto* bench_cmd = app.add_subcommand("bench", "fixed-budget solver benchmark");
  ExperimentArgs bench_args;
  bench_args.add_to(bench_cmd);
  double budget = 0.0;
  bool auto_budget = false;
  int bench_jobs = 0;
  int timing_repeats = 1;
  std::string bench_out = "bench.csv";
  bench_cmd->add_option("--budget", budget, "time budget per solve in seconds");
  bench_cmd->add_flag("--auto-budget", auto_budget,
                      "calibrate the budget on pilot trials (PG-all ~50% at gap 1e-8)");
  bench_cmd->add_option("--timing-repeats", timing_repeats,
                        "timed runs per (trial, solver); the median gap is recorded");
  bench_cmd->add_option("--jobs", bench_jobs, "ignored: timed runs are serialized");
  bench_cmd->add_option("--out", bench_out, "benchmark CSV path");

  // --- profile ---
  auto* profile_cmd = app.add_subcommand("profile", "performance profiles from a benchmark CSV");
  std::string profile_in, profile_out = "profile.csv";
  double delta_min = 1e-14, delta_max = 1e-2;
  int delta_count = 49;
  profile_cmd->add_option("--in", profile_in, "benchmark CSV")->required();
  profile_cmd->add_option("--out", profile_out, "profile CSV path");
  profile_cmd->add_option("--delta-min", delta_min, "smallest gap threshold");
  profile_cmd->add_option("--delta-max", delta_max, "largest gap threshold");
  profile_cmd->add_option("--delta-count", delta_count, "number of thresholds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);  // prints help or the parse error
    return code == 0 ? 0 : 2;
  }

  if (gen->parsed()) {
    require_writable_dir(gen_dict_out);
    require_writable_dir(gen_obs_out);
    Dictionary a = bench::gen_dictionary(io::parse_dict_kind(gen_kind), gen_m, gen_n,
                                         derive_stream(gen_seed, 1), gen_toeplitz_width);
    VectorXd y = bench::gen_observation(gen_m, derive_stream(gen_seed, 2));
    io::write_matrix_csv(gen_dict_out, a.matrix());
    io::write_vector_csv(gen_obs_out, y);
    print_summary(json{{"command", "gen"},
                       {"kind", gen_kind},
                       {"m", gen_m},
                       {"n", gen_n},
                       {"seed", gen_seed},
                       {"dict", gen_dict_out},
                       {"obs", gen_obs_out}});
    return 0;
  }

  if (solve_cmd->parsed()) {
    require_writable_dir(solve_out);
    ProblemInstance p = solve_inst.load();
    SolveOptions opts;
    opts.gap_tol = gap_tol;
    opts.max_iters = max_iters;
    if (time_budget > 0.0) opts.time_budget_s = time_budget;
    opts.screen_strategy = parse_screen_strategy(screen_opt);
    opts.screen_every = screen_every;
    opts.scaling_variant = scaling_opt == "max" ? ScalingVariant::max : ScalingVariant::full;
    opts.safety_margin = safety_margin;
    opts.record_trace = trace_flag;
    SolveResult res = solve_with_screening(p, opts);
    if (verbose)
      for (const TraceRow& row : res.trace)
        std::cerr << "iter " << row.iteration << " gap " << row.gap << " dim "
                  << row.active_dimension << " t " << row.wall_time_s << "s\n";
    json out = io::solve_result_to_json(res);
    out["lambda"] = p.lambda();
    io::atomic_write(solve_out, out.dump(2) + "\n");
    print_summary(json{{"command", "solve"},
                       {"gap", res.gap},
                       {"iterations", res.iterations},
                       {"screened_total", res.screened_total},
                       {"exit_reason", exit_reason_name(res.exit_reason)},
                       {"lambda", p.lambda()},
                       {"out", solve_out}});
    return 0;
  }

  if (screen_cmd->parsed()) {
    require_writable_dir(screen_out);
    ProblemInstance p = screen_inst.load();
    SafeSphere sphere;
    if (!center_path.empty()) {
      require_readable(center_path);
      if (radius_opt < 0.0) throw std::runtime_error("--center requires --radius >= 0");
      sphere = SafeSphere{io::read_vector_csv(center_path), radius_opt};
    } else {
      VectorXd x = x_path.empty() ? VectorXd(VectorXd::Zero(p.n()))
                                  : io::read_vector_csv(x_path);
      ScalingVariant variant =
          screen_scaling == "max" ? ScalingVariant::max : ScalingVariant::full;
      DualPoint u = make_dual_point(p, x, variant);
      sphere = make_gap_sphere(p, x, u, r0);
    }
    ScreenOutcome out = screen(p.dict(), sphere, p.lambda(), p.weights(),
                               parse_oneshot_strategy(strategy_opt), screen_margin);
    json report = io::screen_outcome_to_json(out, sphere.radius);
    report["lambda"] = p.lambda();
    io::atomic_write(screen_out, report.dump(2) + "\n");
    print_summary(json{{"command", "screen"},
                       {"strategy", strategy_opt},
                       {"screened", out.screened.size()},
                       {"n", p.n()},
                       {"radius", sphere.radius},
                       {"out", screen_out}});
    return 0;
  }

  if (detect_cmd->parsed()) {
    require_writable_dir(detect_out);
    bench::ExperimentConfig cfg = detect_args.load();
    if (detect_args.config_path.empty()) {
      cfg.r0_grid.clear();
      if (!r0_no_zero) cfg.r0_grid.push_back(0.0);
      for (double r : bench::log_spaced(r0_min, r0_max, r0_count)) cfg.r0_grid.push_back(r);
    }
    cfg.jobs = effective_jobs(detect_jobs);
    auto rows = bench::detection_experiment(cfg);
    io::atomic_write(detect_out, io::detection_csv(rows));
    print_summary(json{{"command", "detect"},
                       {"rows", rows.size()},
                       {"trials", cfg.trials},
                       {"seed", cfg.master_seed},
                       {"out", detect_out}});
    return 0;
  }

  if (bench_cmd->parsed()) {
    require_writable_dir(bench_out);
    bench::ExperimentConfig cfg = bench_args.load();
    if (bench_cmd->count("--timing-repeats") > 0) cfg.timing_repeats = timing_repeats;
    if (bench_cmd->count("--jobs") > 0)
      std::cerr << "warning: --jobs is ignored; timed runs are serialized for fairness\n";
    if (auto_budget)
      cfg.time_budget_s = bench::calibrate_budget(cfg);
    else if (budget > 0.0)
      cfg.time_budget_s = budget;
    else if (bench_args.config_path.empty())
      throw std::runtime_error("need --budget or --auto-budget");
    auto rows = bench::budget_benchmark(cfg);
    io::atomic_write(bench_out, io::bench_csv(rows));
    print_summary(json{{"command", "bench"},
                       {"rows", rows.size()},
                       {"budget_s", cfg.time_budget_s},
                       {"seed", cfg.master_seed},
                       {"out", bench_out}});
    return 0;
  }

  if (profile_cmd->parsed()) {
    require_readable(profile_in);
    require_writable_dir(profile_out);
    auto rows = io::read_bench_csv(profile_in);
    auto profile = bench::performance_profile(rows, bench::log_spaced(delta_min, delta_max, delta_count));
    io::atomic_write(profile_out, io::profile_csv(profile));
    print_summary(json{{"command", "profile"},
                       {"rows", profile.size()},
                       {"in", profile_in},
                       {"out", profile_out}});
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const slopescreen::config_error& e) {
    std::cerr << "numerical guard: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
