#include "grep/mc_estimators.hpp"

#include "grep/kernels.hpp"
#include "grep/random.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace grep {

int McConfig::horizon_for(double gamma, double tolerance) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("horizon_for: bad gamma");
  if (!(tolerance > 0.0 && tolerance < 1.0))
    throw std::invalid_argument("horizon_for: tolerance must lie in (0, 1)");
  if (gamma == 0.0) return 1;
  return std::max(1, static_cast<int>(std::ceil(std::log(tolerance) / std::log(gamma))));
}

void McConfig::validate(double gamma) const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
  if (n_trajectories < 1) throw std::invalid_argument("n_trajectories must be >= 1");
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (!(truncation_tolerance > 0.0 && truncation_tolerance < 1.0))
    throw std::invalid_argument("truncation_tolerance must lie in (0, 1)");
  const double bias = std::pow(gamma, horizon);
  if (bias > truncation_tolerance * (1.0 + 1e-12)) {
    throw std::invalid_argument("horizon " + std::to_string(horizon) +
                                " too short: gamma^horizon = " + std::to_string(bias) +
                                " exceeds the truncation tolerance");
  }
}

OccupancyVector mc_occupancy(const ProjectionMatrix& f, const StateDistribution& s0, double gamma,
                             const McConfig& cfg) {
  cfg.validate(gamma);
  if (s0.size() != f.n_states()) throw std::invalid_argument("mc_occupancy: size mismatch");
  const Vector sum = kernels::omp::forward_visits(f.values(), s0.values(), gamma,
                                                  cfg.n_trajectories, cfg.horizon, cfg.rng_seed);
  return {sum / static_cast<double>(cfg.n_trajectories)};
}

namespace {

Vector adjoint_part(const ProjectionMatrix& f, const Vector& weights, double gamma,
                    const McConfig& cfg, std::uint64_t seed) {
  if (!(weights.sum() > 0.0)) return Vector::Zero(weights.size());
  const Vector sum = kernels::omp::backward_visits(f.values(), weights, gamma, cfg.n_trajectories,
                                                   cfg.horizon, seed, cfg.adjoint_walk);
  return sum / static_cast<double>(cfg.n_trajectories);
}

}  // namespace

ExpectedRewardVector mc_adjoint(const ProjectionMatrix& f, const RewardVector& r, double gamma,
                                const McConfig& cfg) {
  cfg.validate(gamma);
  if (r.size() != f.n_states()) throw std::invalid_argument("mc_adjoint: size mismatch");
  const Vector& values = r.values();
  if ((values.array() >= 0.0).all()) return {adjoint_part(f, values, gamma, cfg, cfg.rng_seed)};
  if (!cfg.split_signed_rewards)
    throw std::invalid_argument("mc_adjoint: negative rewards need split_signed_rewards");
  const Vector positive = values.cwiseMax(0.0);
  const Vector negative = (-values).cwiseMax(0.0);
  return {adjoint_part(f, positive, gamma, cfg, derive_seed(cfg.rng_seed, 0)) -
          adjoint_part(f, negative, gamma, cfg, derive_seed(cfg.rng_seed, 1))};
}

GradientMatrix mc_policy_gradient(const Environment& env, const OccupancyVector& z_hat,
                                  const ExpectedRewardVector& q_hat, double gamma,
                                  bool normalize) {
  GradientMatrix g = policy_gradient(env, z_hat, q_hat, gamma);
  if (normalize) {
    const double top = g.max_abs();
    if (top > 0.0) g.values /= top;
  }
  return g;
}

double relative_l2_error(const Vector& estimate, const Vector& exact) {
  if (estimate.size() != exact.size()) throw std::invalid_argument("relative_l2_error: sizes");
  return (estimate - exact).norm() / exact.norm();
}

double cosine_similarity(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("cosine_similarity: shape mismatch");
  const double denom = a.norm() * b.norm();
  return denom > 0.0 ? a.cwiseProduct(b).sum() / denom : 0.0;
}

}  // namespace grep
