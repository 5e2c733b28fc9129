#pragma once

// Planning directly over the induced kernel F for deterministic environments,
// where choosing an action in state i is the same as choosing a successor j.

#include "grep/exact_planner.hpp"
#include "grep/mdp.hpp"

#include <optional>
#include <vector>

namespace grep {

/// Physically possible transitions (j <- i). Every column has a true entry.
class SupportMask {
 public:
  explicit SupportMask(Mask allowed);

  /// Union over actions of the environment's support.
  static SupportMask from_environment(const Environment& env);

  int n_states() const { return static_cast<int>(allowed_.rows()); }
  const Mask& allowed() const { return allowed_; }
  bool operator()(int next, int state) const { return allowed_(next, state); }

 private:
  Mask allowed_;
};

enum class ImplicitGradientForm {
  ChainRule,    // gamma * q z^T, the exact dH/dF
  RewardOuter,  // r z^T, kept for comparison only
};

/// gamma * q z^T, i.e. dH/dF(j, i) = gamma q_j z_i.
Matrix implicit_gradient(const ExpectedRewardVector& q, const OccupancyVector& z, double gamma);

/// r z^T. Not a derivative of H in general; see ImplicitGradientForm.
Matrix implicit_gradient_reward_outer(const RewardVector& r, const OccupancyVector& z);

/// Zero the entries of g outside the mask.
Matrix mask_gradient(const Matrix& g, const SupportMask& mask);

/// Masked gradient with each column's mean over its allowed entries removed,
/// so a step keeps column sums fixed. The raw masked gradient is nonnegative
/// whenever r is, and adding it then renormalizing pulls every column toward
/// the gradient's own profile, which can lower H once F is sharp.
Matrix center_columns(const Matrix& g, const SupportMask& mask);

/// F' = renormalize(clamp(F + alpha * masked gradient)), the gradient
/// column-centered when `center` is set. A column that clamps to all zeros
/// keeps its previous values.
ProjectionMatrix implicit_step(const ProjectionMatrix& f, const StateDistribution& s0,
                               const RewardVector& r, const SupportMask& mask, double gamma,
                               double alpha,
                               ImplicitGradientForm form = ImplicitGradientForm::ChainRule,
                               bool center = true);

struct ImplicitConfig {
  double gamma = 0.95;
  double step_size = 1.0;
  bool line_search = true;
  double backtrack = 0.5;
  int max_halvings = 20;
  int max_iterations = 100;
  ImplicitGradientForm form = ImplicitGradientForm::ChainRule;
  bool center = true;
};

struct ImplicitTrace {
  std::vector<double> h;  // h[0] is the initial objective
  ProjectionMatrix final_kernel;
};

ImplicitTrace implicit_optimize(const ProjectionMatrix& f0, const StateDistribution& s0,
                                const RewardVector& r, const SupportMask& mask,
                                const ImplicitConfig& cfg);

/// Most probable successor of each state (lowest index on ties).
std::vector<int> most_probable_successors(const ProjectionMatrix& f);

/// Steps taken following most_probable_successors from `start` until a goal
/// is reached; nullopt if the walk cycles or exceeds max_steps.
std::optional<int> successor_path_length(const ProjectionMatrix& f, int start,
                                         const std::vector<int>& goals, int max_steps);

/// Recovers a policy from F in a deterministic environment: action k in state
/// i receives F(succ(k, i), i) split evenly among the actions sharing that
/// successor. Throws if env is not deterministic or F leaves env's support.
Policy implied_policy(const Environment& env, const ProjectionMatrix& f);

/// Inverse of I - gamma (F + u v^T) from k_inv = (I - gamma F)^{-1} in O(N^2).
/// Throws std::domain_error when 1 - gamma v^T k_inv u is within 1e-12 of 0.
Matrix rank_one_inverse_update(const Matrix& k_inv, const Vector& u, const Vector& v,
                               double gamma);

}  // namespace grep
