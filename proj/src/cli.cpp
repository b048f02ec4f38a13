#include "gmlpnp/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gmlpnp/bench.hpp"
#include "gmlpnp/gml_solver.hpp"
#include "gmlpnp/io.hpp"

namespace gmlpnp::cli {
namespace {

namespace fs = std::filesystem;
using io::json;

std::vector<std::size_t> point_range(std::size_t from, std::size_t to, std::size_t step) {
  std::vector<std::size_t> v;
  for (std::size_t n = from; n <= to; n += step) v.push_back(n);
  return v;
}

bool prepare_dir(const std::string& dir, std::ostream& err) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    err << "error: cannot create output directory '" << dir << "'\n";
    return false;
  }
  return true;
}

bool write_file(const fs::path& path, const std::string& content, std::ostream& err) {
  std::ofstream f(path, std::ios::binary);
  if (f) f << content;
  if (!f) {
    err << "error: cannot write '" << path.string() << "'\n";
    return false;
  }
  return true;
}

void apply_preset(const std::string& name, bench::ExperimentConfig& cfg) {
  if (name == "fig2") {
    cfg.n_values = point_range(20, 200, 20);
    cfg.sigma_values = {0.1};
    cfg.trials = 500;
  } else if (name == "fig3") {
    cfg.n_values = {50};
    cfg.sigma_values = {0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5};
    cfg.trials = 500;
  } else if (name == "timing") {
    cfg.n_values = point_range(20, 200, 20);
    cfg.sigma_values = {0.1};
    cfg.trials = 200;
    cfg.methods = {bench::Method::Gmlpnp, bench::Method::LinearInit};
    cfg.threads = 1;
  } else {
    throw io::SchemaError("preset", "unknown preset '" + name + "' (expected fig2, fig3 or timing)");
  }
}

void apply_config_file(const std::string& path, bench::ExperimentConfig& cfg) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read config '" + path + "'");
  const json j = json::parse(f);
  if (!j.is_object()) throw io::SchemaError("<root>", "expected an object");
  try {
    if (j.contains("preset")) apply_preset(j.at("preset").get<std::string>(), cfg);
    if (j.contains("n")) cfg.n_values = j.at("n").get<std::vector<std::size_t>>();
    if (j.contains("sigma")) cfg.sigma_values = j.at("sigma").get<std::vector<double>>();
    if (j.contains("trials")) cfg.trials = j.at("trials").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<unsigned>();
    if (j.contains("methods")) {
      cfg.methods.clear();
      for (const auto& m : j.at("methods")) cfg.methods.push_back(bench::parse_method(m.get<std::string>()));
    }
  } catch (const json::exception& ex) {
    throw io::SchemaError("config", ex.what());
  }
}

}  // namespace

int cmd_solve(const SolveOptions& opts, std::ostream& out, std::ostream& err) {
  io::CaseFile input;
  try {
    std::ifstream f(opts.input_path);
    if (!f) {
      err << "error: cannot read '" << opts.input_path << "'\n";
      return kExitIoError;
    }
    input = io::case_from_json(json::parse(f));
    if (opts.init != "linear" && opts.init != "file") {
      throw io::SchemaError("--init", "expected 'linear' or 'file'");
    }
    if (opts.init == "file" && !input.initial_pose) {
      throw io::SchemaError("initial_pose", "missing required field (--init file)");
    }
  } catch (const json::parse_error& ex) {
    err << "error: malformed JSON: " << ex.what() << '\n';
    return kExitIoError;
  } catch (const io::SchemaError& ex) {
    err << "error: schema: " << ex.what() << '\n';
    return kExitIoError;
  }

  if (input.correspondences.empty()) {
    err << "error: " << to_string(ErrorCode::InsufficientPoints) << ": correspondence list is empty\n";
    return kExitIoError;
  }

  OuterLoopConfig cfg;
  cfg.max_outer_iterations = opts.max_outer;
  cfg.covariance_threshold = opts.cov_threshold;
  try {
    const std::optional<Pose> init = opts.init == "file" ? input.initial_pose : std::nullopt;
    const SolveReport report = solve(input.correspondences, init, cfg);
    json j = io::report_to_json(report);
    if (input.ground_truth) {
      j["errors"] = {
          {"rotation_deg", bench::rotation_error(input.ground_truth->rotation, report.pose.rotation)},
          {"translation_rel", bench::translation_error(input.ground_truth->translation, report.pose.translation)}};
    }
    out << j.dump(2) << '\n';
  } catch (const std::exception& ex) {
    err << "error: solver failure: " << ex.what() << '\n';
    return kExitSolverFailure;
  }
  return kExitOk;
}

int cmd_bench(const BenchOptions& opts, std::ostream& out, std::ostream& err) {
  bench::ExperimentConfig cfg;
  try {
    if (opts.preset) apply_preset(*opts.preset, cfg);
    if (opts.config_path) apply_config_file(*opts.config_path, cfg);
    if (opts.n_values) cfg.n_values = *opts.n_values;
    if (opts.sigma_values) cfg.sigma_values = *opts.sigma_values;
    if (opts.trials) cfg.trials = *opts.trials;
    if (opts.threads) cfg.threads = *opts.threads;
    if (opts.methods) {
      cfg.methods.clear();
      for (const auto& m : *opts.methods) cfg.methods.push_back(bench::parse_method(m));
    }
    if (opts.seed) cfg.seed = *opts.seed;
    if (cfg.n_values.empty() || cfg.sigma_values.empty() || cfg.methods.empty() || cfg.trials < 0) {
      throw io::SchemaError("bench", "grid, methods and trial count must be non-empty");
    }
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitIoError;
  }

  if (opts.emit_case) {
    bench::SceneConfig scene_cfg = cfg.scene;
    scene_cfg.n_points = cfg.n_values.front();
    scene_cfg.rng_seed = bench::trial_seed(cfg.seed, 0, 0);
    bench::NoiseConfig noise;
    noise.sigma_obj = cfg.sigma_values.front();
    noise.sigma_img = noise.sigma_obj * cfg.image_noise_per_meter;
    try {
      const bench::Scene scene = bench::generate_scene(scene_cfg, noise);
      const json j = io::scene_to_case_json(scene, scene_cfg.camera);
      if (!write_file(*opts.emit_case, j.dump(2) + "\n", err)) return kExitIoError;
    } catch (const std::exception& ex) {
      err << "error: " << ex.what() << '\n';
      return kExitIoError;
    }
    out << "# seed " << cfg.seed << ": wrote " << *opts.emit_case << '\n';
    return kExitOk;
  }

  if (!prepare_dir(opts.out_dir, err)) return kExitIoError;
  const auto records = bench::run_experiment(cfg);

  std::ostringstream trials, iterations;
  bench::write_trials_csv(trials, records);
  bench::write_iterations_csv(iterations, records);
  const fs::path dir(opts.out_dir);
  if (!write_file(dir / "trials.csv", trials.str(), err)) return kExitIoError;
  if (!write_file(dir / "iterations.csv", iterations.str(), err)) return kExitIoError;

  out << "# bench seed=" << cfg.seed << " trials=" << cfg.trials << " out=" << opts.out_dir << '\n';
  bench::print_summary(out, bench::aggregate(records));
  return kExitOk;
}

int cmd_convergence(const ConvergenceOptions& opts, std::ostream& out, std::ostream& err) {
  bench::ExperimentConfig cfg;
  cfg.n_values = {opts.n_points};
  cfg.sigma_values = {opts.sigma};
  cfg.trials = opts.trials;
  cfg.seed = opts.seed;
  cfg.threads = opts.threads;
  cfg.methods = {bench::Method::Gmlpnp};
  if (opts.trials < 1) {
    err << "error: --trials must be positive\n";
    return kExitIoError;
  }

  if (!prepare_dir(opts.out_dir, err)) return kExitIoError;
  const auto records = bench::run_experiment(cfg);

  std::ostringstream iterations;
  bench::write_iterations_csv(iterations, records);
  if (!write_file(fs::path(opts.out_dir) / "iterations.csv", iterations.str(), err)) return kExitIoError;

  std::vector<double> iters;
  int within_two = 0;
  for (const auto& r : records) {
    if (r.failed) continue;
    iters.push_back(r.outer_iterations);
    within_two += (r.converged && r.outer_iterations <= 2) ? 1 : 0;
  }
  const auto det = bench::mean_trace(records, bench::Trace::DetV);
  const auto frob = bench::mean_trace(records, bench::Trace::FrobError);

  out << "# convergence seed=" << cfg.seed << " trials=" << cfg.trials << " n=" << opts.n_points
      << " sigma=" << opts.sigma << '\n';
  char line[128];
  std::snprintf(line, sizeof line, "%9s %16s %16s\n", "iteration", "mean_det_V", "mean_frob_err");
  out << line;
  for (std::size_t k = 0; k < det.size(); ++k) {
    std::snprintf(line, sizeof line, "%9zu %16.8g %16.8g\n", k, det[k], frob[k]);
    out << line;
  }
  out << "median outer iterations: " << bench::median(iters) << '\n';
  out << "converged within 2 iterations: " << within_two << '/' << iters.size() << '\n';
  return kExitOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pose and noise covariance estimation from 3D-ray correspondences"};
  app.require_subcommand(1);

  SolveOptions solve_opts;
  auto* solve_cmd = app.add_subcommand("solve", "Solve one correspondence file and print a JSON report");
  solve_cmd->add_option("file", solve_opts.input_path, "Correspondence JSON file")->required();
  solve_cmd->add_option("--init", solve_opts.init, "Initial pose source")->check(CLI::IsMember({"linear", "file"}));
  solve_cmd->add_option("--max-outer", solve_opts.max_outer, "Maximum outer iterations")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--cov-threshold", solve_opts.cov_threshold, "Covariance convergence threshold")
      ->check(CLI::PositiveNumber);

  BenchOptions bench_opts;
  std::string preset, config, emit;
  std::vector<std::size_t> ns;
  std::vector<double> sigmas;
  std::vector<std::string> methods;
  int trials = 0;
  unsigned threads = 0;
  std::uint64_t seed = 0;
  auto* bench_cmd = app.add_subcommand("bench", "Run the synthetic benchmark sweep");
  auto* o_preset = bench_cmd->add_option("--preset", preset, "fig2 | fig3 | timing");
  auto* o_config = bench_cmd->add_option("--config", config, "Sweep configuration JSON");
  auto* o_n = bench_cmd->add_option("--n", ns, "Point counts");
  auto* o_sigma = bench_cmd->add_option("--sigma", sigmas, "Object noise levels (m)");
  auto* o_methods = bench_cmd->add_option("--methods", methods, "gmlpnp gmlpnp_star ml_identity linear_init");
  auto* o_trials = bench_cmd->add_option("--trials", trials, "Trials per grid point")->check(CLI::NonNegativeNumber);
  auto* o_seed = bench_cmd->add_option("--seed", seed, "RNG seed");
  bench_cmd->add_option("--out", bench_opts.out_dir, "Output directory");
  auto* o_threads = bench_cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
  auto* o_emit = bench_cmd->add_option("--emit-case", emit, "Write one scene as a solve input and exit");

  ConvergenceOptions conv_opts;
  auto* conv_cmd = app.add_subcommand("convergence", "Outer-loop convergence diagnostics (n=200, sigma=0.5)");
  conv_cmd->add_option("--trials", conv_opts.trials, "Trials")->check(CLI::PositiveNumber);
  conv_cmd->add_option("--seed", conv_opts.seed, "RNG seed");
  conv_cmd->add_option("--out", conv_opts.out_dir, "Output directory");
  conv_cmd->add_option("--threads", conv_opts.threads, "Worker threads (0 = all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitIoError;
  }

  if (solve_cmd->parsed()) return cmd_solve(solve_opts, out, err);
  if (bench_cmd->parsed()) {
    if (o_preset->count()) bench_opts.preset = preset;
    if (o_config->count()) bench_opts.config_path = config;
    if (o_n->count()) bench_opts.n_values = ns;
    if (o_sigma->count()) bench_opts.sigma_values = sigmas;
    if (o_methods->count()) bench_opts.methods = methods;
    if (o_trials->count()) bench_opts.trials = trials;
    if (o_threads->count()) bench_opts.threads = threads;
    if (o_seed->count()) bench_opts.seed = seed;
    if (o_emit->count()) bench_opts.emit_case = emit;
    return cmd_bench(bench_opts, out, err);
  }
  return cmd_convergence(conv_opts, out, err);
}

}  // namespace gmlpnp::cli
