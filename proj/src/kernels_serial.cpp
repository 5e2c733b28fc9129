#include "grep/kernels.hpp"
#include "grep/rollout.hpp"

#include "walk_tables.hpp"

namespace grep::kernels::serial {

Matrix projection(std::span<const Matrix> transitions, const Matrix& policy) {
  const Eigen::Index n = policy.cols();
  Matrix f = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < transitions.size(); ++k) {
      f.col(i) += policy(static_cast<Eigen::Index>(k), i) * transitions[k].col(i);
    }
  }
  return f;
}

Matrix policy_gradient(std::span<const Matrix> transitions, const Vector& z, const Vector& q,
                       double gamma) {
  const auto n_actions = static_cast<Eigen::Index>(transitions.size());
  Matrix g(n_actions, z.size());
  for (Eigen::Index k = 0; k < n_actions; ++k) {
    const Vector next_value = transitions[k].transpose() * q;
    g.row(k) = (gamma * z.array() * next_value.array()).matrix().transpose();
  }
  return g;
}

Matrix central_difference(const Matrix& x, double h, const MatrixObjective& f) {
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    for (Eigen::Index k = 0; k < x.rows(); ++k) {
      probe(k, i) = x(k, i) + h;
      const double up = f(probe);
      probe(k, i) = x(k, i) - h;
      const double down = f(probe);
      probe(k, i) = x(k, i);
      grad(k, i) = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

Vector forward_visits(const Matrix& kernel, const Vector& start, double gamma,
                      std::int64_t n_trajectories, int horizon, std::uint64_t seed) {
  const detail::ColumnTables columns(kernel);
  const detail::ColumnTables start_table(start);
  Vector acc = Vector::Zero(kernel.rows());
  for (std::int64_t n = 0; n < n_trajectories; ++n) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(n));
    detail::forward_walk(columns, start_table, gamma, horizon, rng, acc);
  }
  return acc;
}

Vector backward_visits(const Matrix& kernel, const Vector& seed_weights, double gamma,
                       std::int64_t n_trajectories, int horizon, std::uint64_t seed,
                       AdjointWalk walk) {
  const detail::BackwardTables rows(kernel, gamma, walk == AdjointWalk::CollapseSelfLoops);
  const detail::ColumnTables seed_table(seed_weights);
  const double mass = seed_weights.sum();
  Vector acc = Vector::Zero(kernel.rows());
  for (std::int64_t n = 0; n < n_trajectories; ++n) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(n));
    detail::backward_walk(rows, seed_table, mass, gamma, horizon, rng, acc);
  }
  return acc;
}

std::vector<int> rollout_lengths(const RolloutBatch& batch, int n_runs,
                                 std::vector<bool>* timed_out) {
  std::vector<int> lengths(n_runs);
  if (timed_out) timed_out->assign(n_runs, false);
  for (int r = 0; r < n_runs; ++r) {
    const PathRecord path = rollout(*batch.env, batch.sampler, batch.start, batch.absorbing,
                                    batch.max_steps, derive_seed(batch.seed, r));
    lengths[r] = path.length;
    if (timed_out) (*timed_out)[r] = path.timed_out;
  }
  return lengths;
}

}  // namespace grep::kernels::serial
