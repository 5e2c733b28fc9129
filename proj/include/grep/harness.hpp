#pragma once

// Experiment commands behind the command-line tool. Each command reads an
// ExperimentConfig, writes its outputs under `out`, and returns a summary.
//
// Output files (all CSV files have a header row, '.' decimals, UTF-8):
//   plan     plan_trace.csv  iteration,H,gradient_norm
//            policy.txt      K x N matrix, one action per line
//   curves   curves.csv      iteration,H,pw_mean,pw_min,pw_max,pw_timeouts,
//                            annealed_mean,annealed_min,annealed_max,annealed_timeouts,
//                            mpp_mean,mpp_min,mpp_max,mpp_timeouts
//   fdcheck  fdcheck.csv     action,state,analytic,finite_difference,abs_error
//            fdcheck_report.json
//   mc       mc_errors.csv   n,seed,z_rel_error,q_rel_error,gradient_cosine
//            quiver.dat      x y dx dy   (normalized MC gradient, largest n)
//            quiver_exact.dat
//   online   online_trace.csv  step,episode,state,action,reward,model_error
//            online_report.json
// Episodes that time out are scored as max_steps.

#include "grep/exact_planner.hpp"
#include "grep/online.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace grep::harness {

struct EvaluationConfig {
  int n_runs = 20;
  double anneal_temperature = 4.0;
  int max_steps = 500;
};

enum class PolicyInit { Uniform, Random };

struct CurvesConfig {
  PolicyInit init = PolicyInit::Uniform;
  int iterations = 25;
};

struct FdCheckConfig {
  int n_states = 6;
  int n_actions = 3;
  double gamma = 0.9;
  double h = 1e-5;
  int max_entries = 400;
};

struct McExperimentConfig {
  std::vector<std::int64_t> sample_counts{100, 1000, 10000, 100000};
  int seeds = 5;
  double truncation_tolerance = 1e-6;
};

struct ExperimentConfig {
  std::optional<std::filesystem::path> maze;  // command default when unset
  std::uint64_t seed = 1;
  std::filesystem::path out = "out";
  GrepConfig grep;
  EvaluationConfig evaluation;
  PolicyInit plan_init = PolicyInit::Uniform;
  CurvesConfig curves;
  FdCheckConfig fdcheck;
  McExperimentConfig mc;
  OnlineConfig online;

  /// Missing keys keep their defaults; unknown keys are rejected.
  static ExperimentConfig from_json(const nlohmann::json& doc);
  static ExperimentConfig load(const std::filesystem::path& path);
};

/// Bundled fixture directory (compiled in).
std::filesystem::path data_dir();
std::filesystem::path default_maze(const std::string& command);

struct PlanSummary {
  OptimizationTrace trace;
};

struct CurvesRow {
  int iteration = 0;
  double h = 0.0;
  EvaluationStats pw;
  EvaluationStats annealed;
  EvaluationStats mpp;
};

struct CurvesSummary {
  std::vector<CurvesRow> rows;
  int shortest_path = 0;
  bool h_nondecreasing = true;
  std::optional<int> first_optimal_iteration;
};

struct FdCheckSummary {
  double max_abs_error = 0.0;
  double max_abs_gradient = 0.0;
  int adjoint_solves = 2;
  std::int64_t fd_solves = 0;
};

struct McRow {
  std::int64_t n = 0;
  int seed = 0;
  double z_error = 0.0;
  double q_error = 0.0;
  double gradient_cosine = 0.0;
};

struct McSummary {
  std::vector<McRow> rows;
  std::size_t quiver_rows = 0;
};

struct OnlineSummary {
  std::int64_t steps = 0;
  std::int64_t episodes = 0;
  double model_error = 0.0;
  std::optional<int> mpp_length;
  int shortest_path = 0;
};

PlanSummary cmd_plan(const ExperimentConfig& cfg);
CurvesSummary cmd_curves(const ExperimentConfig& cfg);
FdCheckSummary cmd_fdcheck(const ExperimentConfig& cfg);
McSummary cmd_mc(const ExperimentConfig& cfg);
OnlineSummary cmd_online(const ExperimentConfig& cfg);

/// Shortest round-trip decimal form, independent of locale.
std::string format_number(double value);

}  // namespace grep::harness
