#pragma once

// Prefix-sum tables shared by the serial and OpenMP Monte Carlo kernels.

#include "grep/mdp.hpp"
#include "grep/random.hpp"

#include <span>
#include <vector>

namespace grep::kernels::detail {

/// cdf[i * n + j] = sum_{j' <= j} w(j', i): one table per column of w.
struct ColumnTables {
  int n = 0;
  std::vector<double> cdf;

  explicit ColumnTables(const Matrix& w) : n(static_cast<int>(w.rows())), cdf(w.size()) {
    for (Eigen::Index i = 0; i < w.cols(); ++i) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < w.rows(); ++j) {
        acc += w(j, i);
        cdf[i * n + j] = acc;
      }
    }
  }

  std::span<const double> column(int i) const {
    return {cdf.data() + static_cast<std::size_t>(i) * n, static_cast<std::size_t>(n)};
  }
  double mass(int i) const { return cdf[static_cast<std::size_t>(i) * n + n - 1]; }
};

/// Forward walk under `columns` (tables of F), adding gamma^t at x_t.
inline void forward_walk(const ColumnTables& columns, const ColumnTables& start, double gamma,
                         int horizon, Rng& rng, Vector& acc) {
  int x = sample_from_cdf(start.column(0), rng);
  double g = 1.0;
  for (int t = 0;; ++t) {
    acc[x] += g;
    if (t == horizon) break;
    g *= gamma;
    if (g == 0.0) break;
    x = sample_from_cdf(columns.column(x), rng);
  }
}

/// Tables for the adjoint walks. With self loops collapsed, `rows` is built
/// from F with its diagonal removed and hold[j] = 1 / (1 - gamma F(j, j)) sums
/// the time spent looping at j in closed form; otherwise hold is all ones.
struct BackwardTables {
  ColumnTables rows;
  std::vector<double> hold;

  static Matrix off_diagonal(const Matrix& kernel, bool collapse) {
    Matrix t = kernel.transpose();
    if (collapse) t.diagonal().setZero();
    return t;
  }

  BackwardTables(const Matrix& kernel, double gamma, bool collapse)
      : rows(off_diagonal(kernel, collapse)), hold(kernel.rows(), 1.0) {
    if (collapse) {
      for (Eigen::Index j = 0; j < kernel.rows(); ++j) hold[j] = 1.0 / (1.0 - gamma * kernel(j, j));
    }
  }
};

/// Backward walk; `rows` holds the tables of F^T so column x lists the
/// predecessors of x with weights F(x, y), and rows.mass(x) = c_x.
/// With collapsed self loops each jump stands for at least one time step, so
/// stopping after `horizon` jumps drops no more than time truncation does.
inline void backward_walk(const BackwardTables& tables, const ColumnTables& seed, double seed_mass,
                          double gamma, int horizon, Rng& rng, Vector& acc) {
  int x = sample_from_cdf(seed.column(0), rng);
  double w = seed_mass * tables.hold[x];
  for (int t = 0;; ++t) {
    acc[x] += w;
    if (t == horizon) break;
    const double c = tables.rows.mass(x);
    if (!(c > 0.0)) break;
    x = sample_from_cdf(tables.rows.column(x), rng);
    w *= gamma * c * tables.hold[x];
    if (w == 0.0) break;
  }
}

}  // namespace grep::kernels::detail
