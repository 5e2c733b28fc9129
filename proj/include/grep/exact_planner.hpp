#pragma once

// Exact occupancy / adjoint solves, the policy gradient, and the offline
// gradient-ascent planner built on them.

#include "grep/mdp.hpp"

#include <cstdint>
#include <vector>

namespace grep {

/// Discounted expected visit mass z = (I - gamma F)^{-1} s0.
struct OccupancyVector {
  Vector values;
};

/// Expected discounted reward per start state, q = (I - gamma F^T)^{-1} r.
struct ExpectedRewardVector {
  Vector values;
};

/// dH/dP(k, i), same shape as the policy (K x N).
struct GradientMatrix {
  Matrix values;

  double max_abs() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }
};

struct GrepConfig {
  DiscountConfig discounts;
  double step_size = 1.0;
  bool line_search = true;
  double backtrack = 0.5;
  int max_halvings = 20;
  int max_iterations = 100;
  double gradient_tolerance = 1e-8;
  /// Step along G minus its per-state mean over actions instead of G. G is
  /// nonnegative for nonnegative rewards, and P + alpha G renormalized drifts
  /// toward G's own profile, which stops sharpening an already peaked
  /// column; the centered direction is always an ascent direction.
  bool center_gradient = false;

  void validate() const;
};

OccupancyVector solve_occupancy(const ProjectionMatrix& f, const StateDistribution& s0,
                                double gamma_z);

ExpectedRewardVector solve_adjoint(const ProjectionMatrix& f, const RewardVector& r,
                                   double gamma_q);

double expected_reward(const RewardVector& r, const OccupancyVector& z);

/// H(P) = <r, z(P)> with z solved at gamma_z.
double evaluate_objective(const Environment& env, const Policy& policy,
                          const StateDistribution& s0, const RewardVector& r, double gamma_z);

/// Overload taking an unconstrained K x N matrix; used by finite differences,
/// which perturb entries without renormalizing.
double evaluate_objective(const Environment& env, const Matrix& policy_probs,
                          const StateDistribution& s0, const RewardVector& r, double gamma_z);

/// G(k, i) = gamma * z_i * sum_j T_k(j, i) q_j. This is exactly dH/dP when z
/// and q share the discount gamma.
GradientMatrix policy_gradient(const Environment& env, const OccupancyVector& z,
                               const ExpectedRewardVector& q, double gamma);

/// Central-difference dH/dP with H evaluated through build_projection,
/// solve_occupancy and expected_reward at discounts.gamma_z.
GradientMatrix finite_difference_gradient(const Environment& env, const Policy& policy,
                                          const StateDistribution& s0, const RewardVector& r,
                                          const DiscountConfig& discounts, double h);

struct StepResult {
  Policy policy;
  double h_before = 0.0;
  double h_after = 0.0;
  double gradient_norm = 0.0;  // infinity norm of G at the input policy
  double accepted_step = 0.0;  // 0 when no candidate was accepted
  int halvings = 0;
};

/// One plan-ahead update P <- project(P + alpha G) with optional backtracking.
/// If no step size within the halving budget keeps H from decreasing, the
/// input policy is returned unchanged.
StepResult grep_step(const Environment& env, const Policy& policy, const StateDistribution& s0,
                     const RewardVector& r, const GrepConfig& cfg);

struct TraceEntry {
  int iteration = 0;  // 1-based
  double h = 0.0;     // objective after the step
  double gradient_norm = 0.0;
  Policy policy;
};

struct OptimizationTrace {
  double initial_h = 0.0;
  std::vector<TraceEntry> entries;

  const Policy& final_policy() const { return entries.back().policy; }
};

OptimizationTrace grep_optimize(const Environment& env, const Policy& policy0,
                                const StateDistribution& s0, const RewardVector& r,
                                const GrepConfig& cfg);

/// Maximum probable policy: argmax action per state, lowest index on ties.
std::vector<int> mpp_policy(const Policy& policy);

/// Raise entries to the power `temperature` and renormalize columns.
Policy anneal_policy(const Policy& policy, double temperature);

enum class SamplerKind { ProbabilityWeighted, AnnealedProbabilityWeighted, MaximumProbable };

struct SamplerSpec {
  SamplerKind kind = SamplerKind::ProbabilityWeighted;
  double temperature = 4.0;  // annealed variant only
};

struct EvaluationStats {
  double mean = 0.0;
  int min = 0;
  int max = 0;
  int timeouts = 0;
  std::vector<int> lengths;
};

/// n_runs rollouts from `start` until a goal state; timeouts count as max_steps.
EvaluationStats evaluate_policy(const Environment& env, const SamplerSpec& sampler,
                                const Policy& policy, int start, const std::vector<int>& goals,
                                int n_runs, int max_steps, std::uint64_t rng_seed);

}  // namespace grep
