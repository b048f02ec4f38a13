#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gmlpnp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIoError = 1;
inline constexpr int kExitSolverFailure = 2;

struct SolveOptions {
  std::string input_path;
  /// "linear" or "file" (use the case file's initial_pose).
  std::string init = "linear";
  int max_outer = 10;
  double cov_threshold = 1e-5;
};

struct BenchOptions {
  std::optional<std::string> preset;
  std::optional<std::string> config_path;
  std::optional<std::vector<std::size_t>> n_values;
  std::optional<std::vector<double>> sigma_values;
  std::optional<std::vector<std::string>> methods;
  std::optional<int> trials;
  /// Defaults to 0 when neither the flag nor the config sets it.
  std::optional<std::uint64_t> seed;
  std::string out_dir = "bench_out";
  std::optional<unsigned> threads;
  /// Write one scene as a solve input file and exit without benchmarking.
  std::optional<std::string> emit_case;
};

struct ConvergenceOptions {
  int trials = 500;
  std::uint64_t seed = 0;
  std::string out_dir = "convergence_out";
  unsigned threads = 0;
  std::size_t n_points = 200;
  double sigma = 0.5;
};

int cmd_solve(const SolveOptions& opts, std::ostream& out, std::ostream& err);
int cmd_bench(const BenchOptions& opts, std::ostream& out, std::ostream& err);
int cmd_convergence(const ConvergenceOptions& opts, std::ostream& out, std::ostream& err);

/// Parses argv (including the program name) and dispatches.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gmlpnp::cli
