#include "grep/kernels.hpp"
#include "grep/rollout.hpp"

#include "walk_tables.hpp"

#include <exception>
#include <mutex>

namespace grep::kernels::omp {

namespace {

// Exceptions cannot cross an OpenMP region boundary; keep the first one and
// rethrow it after the region.
class FirstError {
 public:
  template <typename F>
  void run(F&& body) noexcept {
    try {
      body();
    } catch (...) {
      std::lock_guard lock(mutex_);
      if (!error_) error_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::mutex mutex_;
  std::exception_ptr error_;
};

}  // namespace

Matrix projection(std::span<const Matrix> transitions, const Matrix& policy) {
  const Eigen::Index n = policy.cols();
  Matrix f = Matrix::Zero(n, n);
#pragma omp parallel for schedule(static)
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
  const Eigen::Index n = z.size();
  Matrix g(n_actions, n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < n_actions; ++k) {
      g(k, i) = gamma * z[i] * transitions[k].col(i).dot(q);
    }
  }
  return g;
}

Matrix central_difference(const Matrix& x, double h, const MatrixObjective& f) {
  const Eigen::Index rows = x.rows();
  const Eigen::Index total = x.size();
  Matrix grad(x.rows(), x.cols());
  FirstError error;
#pragma omp parallel
  {
    Matrix probe = x;
#pragma omp for schedule(dynamic)
    for (Eigen::Index e = 0; e < total; ++e) {
      error.run([&] {
        const Eigen::Index k = e % rows;
        const Eigen::Index i = e / rows;
        probe(k, i) = x(k, i) + h;
        const double up = f(probe);
        probe(k, i) = x(k, i) - h;
        const double down = f(probe);
        probe(k, i) = x(k, i);
        grad(k, i) = (up - down) / (2.0 * h);
      });
    }
  }
  error.rethrow();
  return grad;
}

namespace {

template <typename Walk>
Vector blocked_sum(Eigen::Index n_states, std::int64_t n_trajectories, std::uint64_t seed,
                   const Walk& walk) {
  const std::int64_t n_blocks = (n_trajectories + kMcBlock - 1) / kMcBlock;
  std::vector<Vector> partial(static_cast<std::size_t>(n_blocks));
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t b = 0; b < n_blocks; ++b) {
    Vector acc = Vector::Zero(n_states);
    const std::int64_t end = std::min(n_trajectories, (b + 1) * kMcBlock);
    for (std::int64_t n = b * kMcBlock; n < end; ++n) {
      Rng rng = make_stream(seed, static_cast<std::uint64_t>(n));
      walk(rng, acc);
    }
    partial[static_cast<std::size_t>(b)] = std::move(acc);
  }
  Vector total = Vector::Zero(n_states);
  for (const auto& p : partial) total += p;
  return total;
}

}  // namespace

Vector forward_visits(const Matrix& kernel, const Vector& start, double gamma,
                      std::int64_t n_trajectories, int horizon, std::uint64_t seed) {
  const detail::ColumnTables columns(kernel);
  const detail::ColumnTables start_table(start);
  return blocked_sum(kernel.rows(), n_trajectories, seed, [&](Rng& rng, Vector& acc) {
    detail::forward_walk(columns, start_table, gamma, horizon, rng, acc);
  });
}

Vector backward_visits(const Matrix& kernel, const Vector& seed_weights, double gamma,
                       std::int64_t n_trajectories, int horizon, std::uint64_t seed,
                       AdjointWalk walk) {
  const detail::BackwardTables rows(kernel, gamma, walk == AdjointWalk::CollapseSelfLoops);
  const detail::ColumnTables seed_table(seed_weights);
  const double mass = seed_weights.sum();
  return blocked_sum(kernel.rows(), n_trajectories, seed, [&](Rng& rng, Vector& acc) {
    detail::backward_walk(rows, seed_table, mass, gamma, horizon, rng, acc);
  });
}

std::vector<int> rollout_lengths(const RolloutBatch& batch, int n_runs,
                                 std::vector<bool>* timed_out) {
  std::vector<int> lengths(n_runs);
  std::vector<char> flags(n_runs, 0);
  FirstError error;
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < n_runs; ++r) {
    error.run([&] {
      const PathRecord path = rollout(*batch.env, batch.sampler, batch.start, batch.absorbing,
                                      batch.max_steps, derive_seed(batch.seed, r));
      lengths[r] = path.length;
      flags[r] = path.timed_out ? 1 : 0;
    });
  }
  error.rethrow();
  if (timed_out) timed_out->assign(flags.begin(), flags.end());
  return lengths;
}

}  // namespace grep::kernels::omp
