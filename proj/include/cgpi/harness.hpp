#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cgpi/algos.hpp"
#include "cgpi/analysis.hpp"

namespace cgpi {

struct RunOptions {
  AlgoVariant algo = AlgoVariant::Td3;
  std::string env = "lqr1d";
  std::vector<std::uint64_t> seeds;
  std::int64_t steps = 30000;
  std::int64_t eval_every = 1000;
  AlgoConfig config;  // variant defaults, possibly overridden
  std::filesystem::path out_dir;
  bool force = false;
};

struct RunArtifact {
  std::uint64_t seed = 0;
  std::filesystem::path seed_dir;
  std::filesystem::path curve_csv;
  std::filesystem::path summary_json;
  LearningCurve curve;
};

struct RunResult {
  std::filesystem::path dir;
  std::vector<RunArtifact> seeds;
  double final_mean = 0.0;  // across seeds, last evaluation point each
  double final_std = 0.0;
};

// Trains each seed independently, writes per-seed curve CSV, per-seed and
// run-level summaries, a reproducing config snapshot, and final checkpoints.
RunResult run(const RunOptions& options);

// Exact, stable curve schema.
inline constexpr const char* kCurveHeader =
    "step,eval_return_mean,eval_return_std,policy_sigma_mean,alpha";

void write_curve_csv(const std::filesystem::path& path, const LearningCurve& curve);
LearningCurve read_curve_csv(const std::filesystem::path& path);

struct ComparisonReport {
  std::string env;
  std::string label_a, label_b;
  std::vector<double> finals_a, finals_b;
  double mean_a = 0.0, std_a = 0.0;
  double mean_b = 0.0, std_b = 0.0;
  WelchResult welch;
  bool significant = false;  // p < 0.05
  int window = 1;
};

// Welch's t-test on final evaluation returns across seeds; `window` averages
// the last N evaluation points per seed.
ComparisonReport compare(const std::filesystem::path& run_dir_a,
                         const std::filesystem::path& run_dir_b, int window = 1);

enum class PlotMode { Return, Sigma };

// Self-contained SVG: per-run mean curve with a +/-1 std band across seeds,
// legend from directory names, and the plotted data embedded as a comment.
void plot(const std::vector<std::filesystem::path>& run_dirs,
          const std::filesystem::path& out_path, PlotMode mode = PlotMode::Return);

// Rebuilds the critic/policy from a seed directory's checkpoints, gathers
// probe states by rolling out the mean policy, and measures the
// stochastic-vs-deterministic objective gap.
TaylorReport taylor_from_run(const std::filesystem::path& seed_dir, double sigma,
                             std::int64_t mc_samples, int n_states, double hessian_eps,
                             std::uint64_t rng_seed);

}  // namespace cgpi
