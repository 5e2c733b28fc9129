#include "grep/online.hpp"

#include <stdexcept>
#include <string>

namespace grep {

void OnlineConfig::validate() const {
  if (plan_steps_per_action < 0) throw std::invalid_argument("plan_steps_per_action must be >= 0");
  if (mode == EstimationMode::Rate && !(learning_rate > 0.0 && learning_rate <= 1.0))
    throw std::invalid_argument("learning_rate must lie in (0, 1]");
  if (!(exploration >= 0.0 && exploration <= 1.0))
    throw std::invalid_argument("exploration must lie in [0, 1]");
  if (max_total_steps < 0) throw std::invalid_argument("max_total_steps must be >= 0");
  if (max_episode_steps < 1) throw std::invalid_argument("max_episode_steps must be >= 1");
  planner.validate();
}

EnvironmentEstimate::EnvironmentEstimate(std::vector<Mask> support) : support_(std::move(support)) {
  if (support_.empty()) throw std::invalid_argument("estimate needs at least one action");
  const auto n = support_.front().rows();
  if (n == 0) throw std::invalid_argument("estimate needs at least one state");
  for (const Mask& s : support_) {
    if (s.rows() != n || s.cols() != n) throw std::invalid_argument("support masks must be N x N");
    Matrix t = s.cast<double>();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double c = t.col(i).sum();
      if (c == 0.0) throw std::invalid_argument("support column without any successor");
      t.col(i) /= c;
    }
    t_hat_.push_back(std::move(t));
    counts_.push_back(Counts::Zero(n, n));
  }
  rewards_ = Vector::Zero(n);
  reward_visits_ = Vector::Zero(n);
}

EnvironmentEstimate EnvironmentEstimate::uninformed(int n_states, int n_actions) {
  return EnvironmentEstimate(
      std::vector<Mask>(n_actions, Mask::Constant(n_states, n_states, true)));
}

void EnvironmentEstimate::make_absorbing(int state) {
  if (state < 0 || state >= n_states()) throw std::out_of_range("make_absorbing: bad state");
  for (int k = 0; k < n_actions(); ++k) {
    support_[k].col(state).setConstant(false);
    support_[k](state, state) = true;
    t_hat_[k].col(state).setZero();
    t_hat_[k](state, state) = 1.0;
  }
}

void EnvironmentEstimate::renormalize_column(int action, int state, const Vector& fallback) {
  auto col = t_hat_[action].col(state);
  col = support_[action].col(state).select(col, Vector::Zero(col.size()));
  const double sum = col.sum();
  if (sum > 0.0) {
    col /= sum;
  } else {
    col = fallback;
  }
}

bool EnvironmentEstimate::observe_transition(int state, int action, int next_state,
                                             const OnlineConfig& cfg) {
  const int n = n_states();
  if (state < 0 || state >= n || next_state < 0 || next_state >= n || action < 0 ||
      action >= n_actions())
    throw std::out_of_range("observe_transition: index out of range");
  if (!support_[action](next_state, state)) {
    if (cfg.out_of_support == OutOfSupport::Reject) return false;
    support_[action](next_state, state) = true;
  }
  counts_[action](next_state, state) += 1;

  Vector observed = Vector::Zero(n);
  observed[next_state] = 1.0;
  auto col = t_hat_[action].col(state);
  if (cfg.mode == EstimationMode::Counts) {
    const auto c = counts_[action].col(state).cast<double>();
    col = c / c.sum();
  } else {
    col += cfg.learning_rate * (observed - Vector(col));
  }
  renormalize_column(action, state, observed);
  return true;
}

void EnvironmentEstimate::observe_reward(int state, double reward, bool average) {
  if (state < 0 || state >= n_states()) throw std::out_of_range("observe_reward: bad state");
  reward_visits_[state] += 1.0;
  if (average) {
    rewards_[state] += (reward - rewards_[state]) / reward_visits_[state];
  } else {
    rewards_[state] = reward;
  }
}

Environment EnvironmentEstimate::to_environment() const { return Environment(t_hat_, support_); }

double EnvironmentEstimate::max_abs_error(const Environment& truth) const {
  if (truth.n_states() != n_states() || truth.n_actions() != n_actions())
    throw std::invalid_argument("max_abs_error: shape mismatch");
  double worst = 0.0;
  for (int k = 0; k < n_actions(); ++k) {
    worst = std::max(worst, (t_hat_[k] - truth.transition(k)).cwiseAbs().maxCoeff());
  }
  return worst;
}

int select_action(const Policy& policy, int state, double epsilon, Rng& rng) {
  if (state < 0 || state >= policy.n_states()) throw std::out_of_range("select_action: bad state");
  const int k = policy.n_actions();
  if (epsilon > 0.0 && uniform01(rng) < epsilon) {
    return std::min(k - 1, static_cast<int>(uniform01(rng) * k));
  }
  const auto col = policy.probs().col(state);
  return sample_weighted({col.data(), static_cast<std::size_t>(k)}, rng);
}

void update_reward(EnvironmentEstimate& est, int state, double reward) {
  est.observe_reward(state, reward, false);
}

bool update_transitions(EnvironmentEstimate& est, int state, int action, int next_state,
                        const OnlineConfig& cfg) {
  return est.observe_transition(state, action, next_state, cfg);
}

OnlineResult online_grep_run(const StepFunction& step, EnvironmentEstimate estimate,
                             Policy policy0, const StateDistribution& s0,
                             const std::vector<int>& goals, const OnlineConfig& cfg,
                             const Environment* audit) {
  cfg.validate();
  const int n = estimate.n_states();
  if (policy0.n_states() != n || policy0.n_actions() != estimate.n_actions() || s0.size() != n)
    throw std::invalid_argument("online_grep_run: shape mismatch");
  std::vector<bool> is_goal(n, false);
  for (int g : goals) is_goal.at(g) = true;

  OnlineResult result{{}, {}, std::move(estimate), std::move(policy0)};
  EnvironmentEstimate& est = result.estimate;
  Policy& policy = result.policy;
  Rng rng(derive_seed(cfg.rng_seed, 0));
  auto model_error = [&]() -> std::optional<double> {
    if (!audit) return std::nullopt;
    return est.max_abs_error(*audit);
  };

  std::int64_t t = 0;
  for (std::int64_t episode = 0; t < cfg.max_total_steps; ++episode) {
    if (cfg.max_episodes >= 0 && episode >= cfg.max_episodes) break;
    int state = sample_weighted({s0.values().data(), static_cast<std::size_t>(n)}, rng);
    int length = 0;
    while (!is_goal[state] && length < cfg.max_episode_steps && t < cfg.max_total_steps) {
      if (cfg.plan_steps_per_action > 0) {
        // Plan ahead from where the agent stands on the current model.
        const Environment model = est.to_environment();
        const RewardVector r_hat = est.reward_vector();
        const StateDistribution here = StateDistribution::one_hot(n, state);
        for (int p = 0; p < cfg.plan_steps_per_action; ++p) {
          policy = grep_step(model, policy, here, r_hat, cfg.planner).policy;
        }
      }
      const int action = select_action(policy, state, cfg.exploration, rng);
      const StepOutcome out = step(state, action);
      est.observe_reward(out.next_state, out.reward, cfg.average_rewards);
      est.observe_transition(state, action, out.next_state, cfg);
      result.steps.push_back({t, episode, state, action, out.reward, model_error()});
      state = out.next_state;
      ++length;
      ++t;
    }
    result.episodes.push_back({episode, length, is_goal[state], model_error()});
    if (length == 0) break;  // s0 sits on a goal; no further progress possible
  }
  return result;
}

}  // namespace grep
