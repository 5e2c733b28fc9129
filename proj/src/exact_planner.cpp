#include "grep/exact_planner.hpp"

#include "grep/kernels.hpp"
#include "grep/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace grep {

namespace {

void require_gamma(double gamma, const char* name) {
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument(std::string(name) + " must lie in [0, 1)");
}

// Solves (I - gamma * a) x = b and checks the residual.
Vector solve_discounted(const Matrix& a, const Vector& b, double gamma) {
  const Eigen::Index n = a.rows();
  const Matrix system = Matrix::Identity(n, n) - gamma * a;
  Eigen::PartialPivLU<Matrix> lu(system);
  Vector x = lu.solve(b);
  const double residual = (system * x - b).lpNorm<Eigen::Infinity>();
  if (!x.allFinite() || residual > 1e-8 * (1.0 + b.lpNorm<Eigen::Infinity>()))
    throw std::runtime_error("discounted solve failed: residual " + std::to_string(residual));
  return x;
}

}  // namespace

void GrepConfig::validate() const {
  discounts.validate();
  if (!(step_size > 0.0)) throw std::invalid_argument("step_size must be positive");
  if (!(backtrack > 0.0 && backtrack < 1.0))
    throw std::invalid_argument("backtrack factor must lie in (0, 1)");
  if (max_halvings < 0) throw std::invalid_argument("max_halvings must be >= 0");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (!(gradient_tolerance >= 0.0))
    throw std::invalid_argument("gradient_tolerance must be nonnegative");
}

OccupancyVector solve_occupancy(const ProjectionMatrix& f, const StateDistribution& s0,
                                double gamma_z) {
  require_gamma(gamma_z, "gamma_z");
  if (s0.size() != f.n_states()) throw std::invalid_argument("solve_occupancy: size mismatch");
  return {solve_discounted(f.values(), s0.values(), gamma_z)};
}

ExpectedRewardVector solve_adjoint(const ProjectionMatrix& f, const RewardVector& r,
                                   double gamma_q) {
  require_gamma(gamma_q, "gamma_q");
  if (r.size() != f.n_states()) throw std::invalid_argument("solve_adjoint: size mismatch");
  return {solve_discounted(f.values().transpose(), r.values(), gamma_q)};
}

double expected_reward(const RewardVector& r, const OccupancyVector& z) {
  if (r.size() != z.values.size()) throw std::invalid_argument("expected_reward: size mismatch");
  return r.values().dot(z.values);
}

double evaluate_objective(const Environment& env, const Matrix& policy_probs,
                          const StateDistribution& s0, const RewardVector& r, double gamma_z) {
  if (policy_probs.rows() != env.n_actions() || policy_probs.cols() != env.n_states())
    throw std::invalid_argument("evaluate_objective: policy shape does not match environment");
  // Perturbed policies are not stochastic, so F is built without validation.
  const Matrix f = kernels::serial::projection(env.transitions(), policy_probs);
  require_gamma(gamma_z, "gamma_z");
  return r.values().dot(solve_discounted(f, s0.values(), gamma_z));
}

double evaluate_objective(const Environment& env, const Policy& policy,
                          const StateDistribution& s0, const RewardVector& r, double gamma_z) {
  return expected_reward(r, solve_occupancy(build_projection(env, policy), s0, gamma_z));
}

GradientMatrix policy_gradient(const Environment& env, const OccupancyVector& z,
                               const ExpectedRewardVector& q, double gamma) {
  if (z.values.size() != env.n_states() || q.values.size() != env.n_states())
    throw std::invalid_argument("policy_gradient: size mismatch");
  return {kernels::omp::policy_gradient(env.transitions(), z.values, q.values, gamma)};
}

GradientMatrix finite_difference_gradient(const Environment& env, const Policy& policy,
                                          const StateDistribution& s0, const RewardVector& r,
                                          const DiscountConfig& discounts, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_difference_gradient: h must be positive");
  discounts.validate();
  if (policy.n_actions() != env.n_actions() || policy.n_states() != env.n_states())
    throw std::invalid_argument("finite_difference_gradient: policy shape mismatch");
  const kernels::MatrixObjective objective = [&](const Matrix& p) {
    return evaluate_objective(env, p, s0, r, discounts.gamma_z);
  };
  return {kernels::omp::central_difference(policy.probs(), h, objective)};
}

StepResult grep_step(const Environment& env, const Policy& policy, const StateDistribution& s0,
                     const RewardVector& r, const GrepConfig& cfg) {
  cfg.validate();
  const ProjectionMatrix f = build_projection(env, policy);
  const OccupancyVector z = solve_occupancy(f, s0, cfg.discounts.gamma_z);
  const ExpectedRewardVector q = solve_adjoint(f, r, cfg.discounts.gamma_q);
  const double h_before = expected_reward(r, z);
  const GradientMatrix g = policy_gradient(env, z, q, cfg.discounts.gamma_q);
  const double norm = g.max_abs();

  StepResult result{policy, h_before, h_before, norm, 0.0, 0};
  if (norm == 0.0) return result;

  Matrix direction = g.values;
  if (cfg.center_gradient) direction.rowwise() -= direction.colwise().mean();

  double alpha = cfg.step_size;
  const int attempts = cfg.line_search ? cfg.max_halvings + 1 : 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    Policy candidate = project_policy(policy.probs() + alpha * direction);
    const double h = evaluate_objective(env, candidate, s0, r, cfg.discounts.gamma_z);
    if (!cfg.line_search || h >= h_before) {
      result.policy = std::move(candidate);
      result.h_after = h;
      result.accepted_step = alpha;
      return result;
    }
    alpha *= cfg.backtrack;
    ++result.halvings;
  }
  return result;
}

OptimizationTrace grep_optimize(const Environment& env, const Policy& policy0,
                                const StateDistribution& s0, const RewardVector& r,
                                const GrepConfig& cfg) {
  cfg.validate();
  OptimizationTrace trace;
  trace.initial_h = evaluate_objective(env, policy0, s0, r, cfg.discounts.gamma_z);
  Policy policy = policy0;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    StepResult step = grep_step(env, policy, s0, r, cfg);
    policy = step.policy;
    trace.entries.push_back({it, step.h_after, step.gradient_norm, std::move(step.policy)});
    if (step.gradient_norm <= cfg.gradient_tolerance) break;
  }
  return trace;
}

std::vector<int> mpp_policy(const Policy& policy) {
  std::vector<int> actions(policy.n_states());
  for (int i = 0; i < policy.n_states(); ++i) {
    int best = 0;
    for (int k = 1; k < policy.n_actions(); ++k) {
      if (policy(k, i) > policy(best, i)) best = k;
    }
    actions[i] = best;
  }
  return actions;
}

Policy anneal_policy(const Policy& policy, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw std::invalid_argument("anneal_policy: temperature must be positive and finite");
  if (temperature == 1.0) return policy;
  Matrix p = policy.probs();
  for (Eigen::Index i = 0; i < p.cols(); ++i) {
    // Scaling by the column max first keeps the largest entry at 1, so the
    // column cannot underflow to all zeros.
    const double top = p.col(i).maxCoeff();
    p.col(i) = (p.col(i) / top).array().pow(temperature).matrix();
    p.col(i) /= p.col(i).sum();
  }
  return Policy(std::move(p));
}

EvaluationStats evaluate_policy(const Environment& env, const SamplerSpec& sampler,
                                const Policy& policy, int start, const std::vector<int>& goals,
                                int n_runs, int max_steps, std::uint64_t rng_seed) {
  if (n_runs < 1) throw std::invalid_argument("evaluate_policy: n_runs must be >= 1");
  if (policy.n_actions() != env.n_actions() || policy.n_states() != env.n_states())
    throw std::invalid_argument("evaluate_policy: policy shape mismatch");

  kernels::RolloutBatch batch;
  batch.env = &env;
  batch.start = start;
  batch.max_steps = max_steps;
  batch.seed = rng_seed;
  batch.absorbing.assign(env.n_states(), false);
  for (int g : goals) {
    if (g < 0 || g >= env.n_states()) throw std::invalid_argument("evaluate_policy: bad goal");
    batch.absorbing[g] = true;
  }

  switch (sampler.kind) {
    case SamplerKind::ProbabilityWeighted:
    case SamplerKind::AnnealedProbabilityWeighted: {
      const Matrix probs = sampler.kind == SamplerKind::ProbabilityWeighted
                               ? policy.probs()
                               : anneal_policy(policy, sampler.temperature).probs();
      batch.sampler = [probs](int state, Rng& rng) {
        return sample_weighted({probs.col(state).data(), static_cast<std::size_t>(probs.rows())},
                               rng);
      };
      break;
    }
    case SamplerKind::MaximumProbable: {
      batch.sampler = [actions = mpp_policy(policy)](int state, Rng&) { return actions[state]; };
      break;
    }
  }

  EvaluationStats stats;
  std::vector<bool> timed_out;
  stats.lengths = kernels::omp::rollout_lengths(batch, n_runs, &timed_out);
  stats.timeouts = static_cast<int>(std::count(timed_out.begin(), timed_out.end(), true));
  stats.min = *std::min_element(stats.lengths.begin(), stats.lengths.end());
  stats.max = *std::max_element(stats.lengths.begin(), stats.lengths.end());
  stats.mean = std::accumulate(stats.lengths.begin(), stats.lengths.end(), 0.0) / n_runs;
  return stats;
}

}  // namespace grep
