#include "grep/implicit_planner.hpp"

#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace grep {

SupportMask::SupportMask(Mask allowed) : allowed_(std::move(allowed)) {
  if (allowed_.rows() == 0 || allowed_.rows() != allowed_.cols())
    throw std::invalid_argument("support mask must be square and non-empty");
  for (Eigen::Index i = 0; i < allowed_.cols(); ++i) {
    if (!allowed_.col(i).any())
      throw std::invalid_argument("support mask: state " + std::to_string(i) +
                                  " has no possible successor");
  }
}

SupportMask SupportMask::from_environment(const Environment& env) {
  Mask m = Mask::Constant(env.n_states(), env.n_states(), false);
  for (const auto& s : env.supports()) m = (m.array() || s.array()).matrix();
  return SupportMask(std::move(m));
}

Matrix implicit_gradient(const ExpectedRewardVector& q, const OccupancyVector& z, double gamma) {
  if (q.values.size() != z.values.size())
    throw std::invalid_argument("implicit_gradient: size mismatch");
  return gamma * q.values * z.values.transpose();
}

Matrix implicit_gradient_reward_outer(const RewardVector& r, const OccupancyVector& z) {
  if (r.size() != z.values.size())
    throw std::invalid_argument("implicit_gradient_reward_outer: size mismatch");
  return r.values() * z.values.transpose();
}

Matrix mask_gradient(const Matrix& g, const SupportMask& mask) {
  if (g.rows() != mask.n_states() || g.cols() != mask.n_states())
    throw std::invalid_argument("mask_gradient: shape mismatch");
  return mask.allowed().select(g, Matrix::Zero(g.rows(), g.cols()));
}

Matrix center_columns(const Matrix& g, const SupportMask& mask) {
  Matrix out = mask_gradient(g, mask);
  for (Eigen::Index i = 0; i < out.cols(); ++i) {
    const auto allowed = mask.allowed().col(i);
    const double mean = out.col(i).sum() / static_cast<double>(allowed.count());
    out.col(i) = allowed.select(out.col(i).array() - mean, 0.0);
  }
  return out;
}

namespace {

void require_inside_mask(const ProjectionMatrix& f, const SupportMask& mask) {
  if (f.n_states() != mask.n_states()) throw std::invalid_argument("kernel/mask size mismatch");
  if (((f.values().array() > 0.0) && !mask.allowed().array()).any())
    throw std::invalid_argument("kernel has mass on transitions outside the support mask");
}

Matrix masked_gradient(const ProjectionMatrix& f, const StateDistribution& s0,
                       const RewardVector& r, const SupportMask& mask, double gamma,
                       ImplicitGradientForm form, bool center) {
  const OccupancyVector z = solve_occupancy(f, s0, gamma);
  const Matrix g = form == ImplicitGradientForm::ChainRule
                       ? implicit_gradient(solve_adjoint(f, r, gamma), z, gamma)
                       : implicit_gradient_reward_outer(r, z);
  return center ? center_columns(g, mask) : mask_gradient(g, mask);
}

ProjectionMatrix apply_step(const ProjectionMatrix& f, const Matrix& g, const SupportMask& mask,
                            double alpha) {
  Matrix next = mask.allowed().select((f.values() + alpha * g).cwiseMax(0.0),
                                      Matrix::Zero(g.rows(), g.cols()));
  for (Eigen::Index i = 0; i < next.cols(); ++i) {
    const double sum = next.col(i).sum();
    if (sum > 0.0) {
      next.col(i) /= sum;
    } else {
      next.col(i) = f.values().col(i);
    }
  }
  return ProjectionMatrix(std::move(next));
}

double objective(const ProjectionMatrix& f, const StateDistribution& s0, const RewardVector& r,
                 double gamma) {
  return expected_reward(r, solve_occupancy(f, s0, gamma));
}

}  // namespace

ProjectionMatrix implicit_step(const ProjectionMatrix& f, const StateDistribution& s0,
                               const RewardVector& r, const SupportMask& mask, double gamma,
                               double alpha, ImplicitGradientForm form, bool center) {
  if (!(alpha > 0.0)) throw std::invalid_argument("implicit_step: alpha must be positive");
  require_inside_mask(f, mask);
  const Matrix g = masked_gradient(f, s0, r, mask, gamma, form, center);
  if ((g.array() == 0.0).all()) return f;
  return apply_step(f, g, mask, alpha);
}

ImplicitTrace implicit_optimize(const ProjectionMatrix& f0, const StateDistribution& s0,
                                const RewardVector& r, const SupportMask& mask,
                                const ImplicitConfig& cfg) {
  if (!(cfg.step_size > 0.0)) throw std::invalid_argument("implicit_optimize: bad step size");
  if (!(cfg.backtrack > 0.0 && cfg.backtrack < 1.0))
    throw std::invalid_argument("implicit_optimize: backtrack must lie in (0, 1)");
  if (cfg.max_iterations < 1) throw std::invalid_argument("implicit_optimize: max_iterations");
  require_inside_mask(f0, mask);

  ImplicitTrace trace{{objective(f0, s0, r, cfg.gamma)}, f0};
  for (int it = 0; it < cfg.max_iterations; ++it) {
    const ProjectionMatrix& f = trace.final_kernel;
    const double h_before = trace.h.back();
    const Matrix g = masked_gradient(f, s0, r, mask, cfg.gamma, cfg.form, cfg.center);
    double alpha = cfg.step_size;
    bool accepted = false;
    const int attempts = cfg.line_search ? cfg.max_halvings + 1 : 1;
    for (int attempt = 0; attempt < attempts && !(g.array() == 0.0).all(); ++attempt) {
      ProjectionMatrix candidate = apply_step(f, g, mask, alpha);
      const double h = objective(candidate, s0, r, cfg.gamma);
      if (!cfg.line_search || h >= h_before) {
        trace.final_kernel = std::move(candidate);
        trace.h.push_back(h);
        accepted = true;
        break;
      }
      alpha *= cfg.backtrack;
    }
    if (!accepted) trace.h.push_back(h_before);
  }
  return trace;
}

std::vector<int> most_probable_successors(const ProjectionMatrix& f) {
  std::vector<int> succ(f.n_states());
  for (int i = 0; i < f.n_states(); ++i) {
    Eigen::Index best = 0;
    f.values().col(i).maxCoeff(&best);
    succ[i] = static_cast<int>(best);
  }
  return succ;
}

std::optional<int> successor_path_length(const ProjectionMatrix& f, int start,
                                         const std::vector<int>& goals, int max_steps) {
  const std::vector<int> succ = most_probable_successors(f);
  const std::set<int> goal_set(goals.begin(), goals.end());
  std::set<int> seen;
  int state = start;
  for (int steps = 0; steps <= max_steps; ++steps) {
    if (goal_set.contains(state)) return steps;
    if (!seen.insert(state).second) return std::nullopt;
    state = succ[state];
  }
  return std::nullopt;
}

Policy implied_policy(const Environment& env, const ProjectionMatrix& f) {
  if (!env.is_deterministic()) throw std::invalid_argument("implied_policy: env not deterministic");
  if (f.n_states() != env.n_states()) throw std::invalid_argument("implied_policy: size mismatch");
  Matrix p = Matrix::Zero(env.n_actions(), env.n_states());
  for (int i = 0; i < env.n_states(); ++i) {
    std::map<int, std::vector<int>> actions_by_successor;
    for (int k = 0; k < env.n_actions(); ++k) {
      Eigen::Index j = 0;
      env.transition(k).col(i).maxCoeff(&j);
      actions_by_successor[static_cast<int>(j)].push_back(k);
    }
    double covered = 0.0;
    for (const auto& [j, actions] : actions_by_successor) {
      covered += f.values()(j, i);
      for (int k : actions) p(k, i) = f.values()(j, i) / static_cast<double>(actions.size());
    }
    if (std::abs(covered - 1.0) > kStochasticTolerance)
      throw std::invalid_argument("implied_policy: kernel column " + std::to_string(i) +
                                  " puts mass on unreachable successors");
  }
  return Policy(std::move(p));
}

Matrix rank_one_inverse_update(const Matrix& k_inv, const Vector& u, const Vector& v,
                               double gamma) {
  if (k_inv.rows() != k_inv.cols() || u.size() != k_inv.rows() || v.size() != k_inv.rows())
    throw std::invalid_argument("rank_one_inverse_update: size mismatch");
  // (A - gamma u v^T)^{-1} = K + gamma K u v^T K / (1 - gamma v^T K u)
  const Vector ku = k_inv * u;
  const Eigen::RowVectorXd vk = v.transpose() * k_inv;
  const double denom = 1.0 - gamma * v.dot(ku);
  if (std::abs(denom) < 1e-12)
    throw std::domain_error("rank_one_inverse_update: updated system is singular");
  return k_inv + (gamma / denom) * ku * vk;
}

}  // namespace grep
