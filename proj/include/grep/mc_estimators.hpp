#pragma once

// Monte Carlo estimates of the occupancy z (forward walks) and the expected
// reward q (weighted backward walks), and the gradient built from them.
//
// Both estimators are unbiased for the horizon-truncated sums
//   z_T = sum_{t<=T} (gamma F)^t s0,   q_T = sum_{t<=T} (gamma F^T)^t r,
// whose truncation bias is bounded by gamma^(T+1) / (1 - gamma) times the
// mass of s0 (resp. the largest |r|). McConfig rejects horizons for which
// gamma^T exceeds `truncation_tolerance`.

#include "grep/exact_planner.hpp"
#include "grep/kernels.hpp"
#include "grep/mdp.hpp"

#include <cstdint>

namespace grep {

struct McConfig {
  std::int64_t n_trajectories = 10000;
  int horizon = 300;
  std::uint64_t rng_seed = 0;
  double truncation_tolerance = 1e-6;
  bool split_signed_rewards = false;
  kernels::AdjointWalk adjoint_walk = kernels::AdjointWalk::CollapseSelfLoops;

  /// Smallest horizon T with gamma^T <= tolerance.
  static int horizon_for(double gamma, double tolerance = 1e-6);

  void validate(double gamma) const;
};

/// Average over forward walks x_0 ~ s0, x_{t+1} ~ F(., x_t) of gamma^t at x_t.
OccupancyVector mc_occupancy(const ProjectionMatrix& f, const StateDistribution& s0, double gamma,
                             const McConfig& cfg);

/// Adjoint walks: x_0 ~ r / |r|_1 with weight |r|_1; from x, a predecessor y
/// is drawn with probability F(x, y) / c_x, c_x = sum_y F(x, y), and the
/// weight is multiplied by gamma * c_x. Each visited state collects the
/// current weight. A walk stops early at a state with c_x = 0. By default
/// self loops are summed in closed form instead of walked; see
/// kernels::AdjointWalk.
///
/// Negative rewards are rejected unless cfg.split_signed_rewards is set, in
/// which case positive and negative parts are estimated separately.
ExpectedRewardVector mc_adjoint(const ProjectionMatrix& f, const RewardVector& r, double gamma,
                                const McConfig& cfg);

/// Plug-in gradient from estimated z and q. With `normalize`, entries are
/// divided by the largest magnitude (left untouched when all are zero).
GradientMatrix mc_policy_gradient(const Environment& env, const OccupancyVector& z_hat,
                                  const ExpectedRewardVector& q_hat, double gamma,
                                  bool normalize = false);

/// |a - b|_2 / |b|_2.
double relative_l2_error(const Vector& estimate, const Vector& exact);

/// Cosine of the angle between two gradient matrices viewed as vectors.
double cosine_similarity(const Matrix& a, const Matrix& b);

}  // namespace grep
