#pragma once

// Data-parallel inner loops. Each kernel has a plain serial version, kept as
// the reference the OpenMP version is tested against, and an OpenMP version
// used by the public API. The OpenMP versions produce results that do not
// depend on the thread count.

#include "grep/mdp.hpp"
#include "grep/random.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace grep::kernels {

/// Scalar objective of a matrix argument; must be safe to call concurrently.
using MatrixObjective = std::function<double(const Matrix&)>;

/// Inputs shared by every rollout in a batch; see rollout.hpp.
struct RolloutBatch {
  const Environment* env = nullptr;
  std::function<int(int state, Rng& rng)> sampler;
  int start = 0;
  std::vector<bool> absorbing;
  int max_steps = 1;
  std::uint64_t seed = 0;
};

/// Trajectories per accumulation block in the Monte Carlo kernels. Block
/// sums are combined in block order, which fixes the floating-point
/// summation order independently of the schedule.
inline constexpr std::int64_t kMcBlock = 512;

/// Plain: predecessor y of x drawn with probability F(x, y) / c_x, weight
/// times gamma * c_x. CollapseSelfLoops: the same walk on F without its
/// diagonal, where arriving at j also multiplies the weight by
/// 1 / (1 - gamma F(j, j)). Both are unbiased; the plain walk's weights have
/// unbounded variance when a state with c_x > 1 / gamma^2 (an absorbing goal
/// with several predecessors, say) is revisited, which the collapsed walk
/// never does through a self loop.
enum class AdjointWalk { Plain, CollapseSelfLoops };

namespace serial {

Matrix projection(std::span<const Matrix> transitions, const Matrix& policy);

/// G(k, i) = gamma * z_i * sum_j T_k(j, i) q_j
Matrix policy_gradient(std::span<const Matrix> transitions, const Vector& z, const Vector& q,
                       double gamma);

/// Central differences of f at x, one entry at a time.
Matrix central_difference(const Matrix& x, double h, const MatrixObjective& f);

/// Sum over trajectories of discounted forward visits (not yet averaged).
Vector forward_visits(const Matrix& kernel, const Vector& start, double gamma,
                      std::int64_t n_trajectories, int horizon, std::uint64_t seed);

/// Sum over weighted backward walks seeded from `seed_weights` (not yet
/// averaged). See mc_estimators.hpp for the walk construction.
Vector backward_visits(const Matrix& kernel, const Vector& seed_weights, double gamma,
                       std::int64_t n_trajectories, int horizon, std::uint64_t seed,
                       AdjointWalk walk = AdjointWalk::CollapseSelfLoops);

/// Path lengths of n_runs rollouts; run r uses stream derive_seed(seed, r).
std::vector<int> rollout_lengths(const RolloutBatch& batch, int n_runs,
                                 std::vector<bool>* timed_out = nullptr);

}  // namespace serial

namespace omp {

Matrix projection(std::span<const Matrix> transitions, const Matrix& policy);
Matrix policy_gradient(std::span<const Matrix> transitions, const Vector& z, const Vector& q,
                       double gamma);
Matrix central_difference(const Matrix& x, double h, const MatrixObjective& f);
Vector forward_visits(const Matrix& kernel, const Vector& start, double gamma,
                      std::int64_t n_trajectories, int horizon, std::uint64_t seed);
Vector backward_visits(const Matrix& kernel, const Vector& seed_weights, double gamma,
                       std::int64_t n_trajectories, int horizon, std::uint64_t seed,
                       AdjointWalk walk = AdjointWalk::CollapseSelfLoops);
std::vector<int> rollout_lengths(const RolloutBatch& batch, int n_runs,
                                 std::vector<bool>* timed_out = nullptr);

}  // namespace omp

}  // namespace grep::kernels
