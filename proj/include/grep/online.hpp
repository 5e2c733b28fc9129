#pragma once

// Online planning for fully observed states: plan on the current model,
// act, then fold the observed transition and reward back into the model.

#include "grep/exact_planner.hpp"
#include "grep/mdp.hpp"
#include "grep/random.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace grep {

enum class EstimationMode { Counts, Rate };
enum class OutOfSupport { Reject, Widen };

struct OnlineConfig {
  int plan_steps_per_action = 1;
  EstimationMode mode = EstimationMode::Counts;
  double learning_rate = 0.1;  // Rate mode
  double exploration = 0.1;    // epsilon of the uniform mixture
  std::int64_t max_total_steps = 50000;
  int max_episode_steps = 500;
  std::int64_t max_episodes = -1;  // unlimited when negative
  OutOfSupport out_of_support = OutOfSupport::Reject;
  bool average_rewards = false;
  std::uint64_t rng_seed = 0;
  GrepConfig planner;

  void validate() const;
};

class EnvironmentEstimate {
 public:
  using Counts = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

  /// Every column uniform over its support.
  EnvironmentEstimate(std::vector<Mask> support);

  /// No prior knowledge: everything possible.
  static EnvironmentEstimate uninformed(int n_states, int n_actions);

  int n_states() const { return static_cast<int>(rewards_.size()); }
  int n_actions() const { return static_cast<int>(t_hat_.size()); }

  const Matrix& t_hat(int action) const { return t_hat_.at(action); }
  const Counts& counts(int action) const { return counts_.at(action); }
  const Mask& support(int action) const { return support_.at(action); }
  const Vector& rewards() const { return rewards_; }

  /// Known terminal state: every action self-loops.
  void make_absorbing(int state);

  /// Returns false when the transition fell outside the support and was
  /// rejected; the estimate is then unchanged.
  bool observe_transition(int state, int action, int next_state, const OnlineConfig& cfg);

  void observe_reward(int state, double reward, bool average = false);

  Environment to_environment() const;
  RewardVector reward_vector() const { return RewardVector(rewards_); }

  /// max over k, j, i of |t_hat_k(j, i) - T_k(j, i)|.
  double max_abs_error(const Environment& truth) const;

 private:
  void renormalize_column(int action, int state, const Vector& fallback);

  std::vector<Matrix> t_hat_;
  std::vector<Counts> counts_;
  std::vector<Mask> support_;
  Vector rewards_;
  Vector reward_visits_;
};

/// With probability 1 - epsilon draw k ~ P(., state), otherwise uniformly.
int select_action(const Policy& policy, int state, double epsilon, Rng& rng);

/// r_hat[state] = reward (last write wins).
void update_reward(EnvironmentEstimate& est, int state, double reward);

bool update_transitions(EnvironmentEstimate& est, int state, int action, int next_state,
                        const OnlineConfig& cfg);

struct StepOutcome {
  int next_state = 0;
  double reward = 0.0;
};

using StepFunction = std::function<StepOutcome(int state, int action)>;

struct OnlineStepRecord {
  std::int64_t step = 0;
  std::int64_t episode = 0;
  int state = 0;
  int action = 0;
  double reward = 0.0;
  std::optional<double> model_error;
};

struct OnlineEpisode {
  std::int64_t episode = 0;
  int length = 0;
  bool reached_goal = false;
  std::optional<double> model_error;
};

struct OnlineResult {
  std::vector<OnlineStepRecord> steps;
  std::vector<OnlineEpisode> episodes;
  EnvironmentEstimate estimate;
  Policy policy;
};

/// Plan, act, observe, update; episodes start from a draw of s0 and end on a
/// goal state or after max_episode_steps. `audit`, when given, is only used
/// to report model error.
OnlineResult online_grep_run(const StepFunction& step, EnvironmentEstimate estimate,
                             Policy policy0, const StateDistribution& s0,
                             const std::vector<int>& goals, const OnlineConfig& cfg,
                             const Environment* audit = nullptr);

}  // namespace grep
