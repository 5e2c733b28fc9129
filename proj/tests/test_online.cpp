#include "grep/maze.hpp"
#include "grep/online.hpp"
#include "grep/random.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <tuple>

using namespace grep;

namespace {

const std::filesystem::path kData = GREP_DATA_DIR;

using Triple = std::tuple<int, int, int>;  // state, action, next

void expect_valid(const EnvironmentEstimate& est) {
  for (int k = 0; k < est.n_actions(); ++k) {
    const Matrix& t = est.t_hat(k);
    ASSERT_LT((t.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12) << "action " << k;
    ASSERT_GE(t.minCoeff(), 0.0);
    ASSERT_FALSE(((t.array() > 0.0) && !est.support(k).array()).any());
  }
}

StepFunction maze_step(const MazeEnvironment& m, Rng& rng) {
  return [&m, &rng](int state, int action) {
    const auto col = m.env.transition(action).col(state);
    const int next = sample_weighted({col.data(), static_cast<std::size_t>(col.size())}, rng);
    return StepOutcome{next, m.r.values()[next]};
  };
}

}  // namespace

TEST(SelectAction, OneHotColumnWithoutExploration) {
  Matrix p = Matrix::Zero(3, 2);
  p(2, 0) = 1.0;
  p(1, 1) = 1.0;
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    EXPECT_EQ(select_action(Policy(p), 0, 0.0, rng), 2);
    EXPECT_EQ(select_action(Policy(p), 1, 0.0, rng), 1);
  }
}

TEST(SelectAction, FullExplorationIsUniform) {
  Matrix p = Matrix::Zero(4, 1);
  p(0, 0) = 1.0;
  Rng rng(2);
  constexpr int kDraws = 10000;
  std::array<int, 4> hits{};
  for (int i = 0; i < kDraws; ++i) ++hits[select_action(Policy(p), 0, 1.0, rng)];
  double chi2 = 0.0;
  for (int h : hits) chi2 += (h - kDraws / 4.0) * (h - kDraws / 4.0) / (kDraws / 4.0);
  EXPECT_LT(chi2, 11.345);  // 99% quantile, 3 degrees of freedom
}

TEST(SelectAction, Reproducible) {
  Rng rng(3);
  const Policy p = random_policy(4, 5, rng);
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(select_action(p, i % 5, 0.3, a), select_action(p, i % 5, 0.3, b));
}

TEST(UpdateReward, OverwriteAndAverage) {
  EnvironmentEstimate est = EnvironmentEstimate::uninformed(3, 2);
  update_reward(est, 2, 1.0);
  update_reward(est, 0, 0.0);
  EXPECT_EQ(est.rewards(), Vector::Unit(3, 2));
  update_reward(est, 1, 5.0);
  update_reward(est, 1, -1.0);
  EXPECT_EQ(est.rewards()[1], -1.0);

  EnvironmentEstimate avg = EnvironmentEstimate::uninformed(2, 1);
  avg.observe_reward(0, 1.0, true);
  avg.observe_reward(0, 2.0, true);
  avg.observe_reward(0, 6.0, true);
  EXPECT_DOUBLE_EQ(avg.rewards()[0], 3.0);
}

TEST(UpdateTransitions, CountsModeOneObservationIsOneHot) {
  EnvironmentEstimate est = EnvironmentEstimate::uninformed(4, 2);
  EXPECT_TRUE(update_transitions(est, 1, 0, 3, {}));
  EXPECT_EQ(Vector(est.t_hat(0).col(1)), Vector::Unit(4, 3));
  // Untouched columns keep the uniform prior.
  EXPECT_DOUBLE_EQ(est.t_hat(1)(0, 1), 0.25);
}

TEST(UpdateTransitions, CountsModeIsEmpiricalFrequency) {
  EnvironmentEstimate est = EnvironmentEstimate::uninformed(3, 1);
  for (int i = 0; i < 5; ++i) {
    update_transitions(est, 0, 0, 1, {});
    update_transitions(est, 0, 0, 2, {});
  }
  EXPECT_DOUBLE_EQ(est.t_hat(0)(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(est.t_hat(0)(2, 0), 0.5);
  EXPECT_DOUBLE_EQ(est.t_hat(0)(0, 0), 0.0);
}

TEST(UpdateTransitions, RateMode) {
  OnlineConfig cfg;
  cfg.mode = EstimationMode::Rate;
  cfg.learning_rate = 1.0;
  EnvironmentEstimate est = EnvironmentEstimate::uninformed(3, 1);
  update_transitions(est, 0, 0, 2, cfg);
  EXPECT_EQ(Vector(est.t_hat(0).col(0)), Vector::Unit(3, 2));

  cfg.learning_rate = 0.5;
  EnvironmentEstimate half = EnvironmentEstimate::uninformed(2, 1);
  update_transitions(half, 0, 0, 1, cfg);
  EXPECT_DOUBLE_EQ(half.t_hat(0)(0, 0), 0.25);
  EXPECT_DOUBLE_EQ(half.t_hat(0)(1, 0), 0.75);
}

TEST(UpdateTransitions, OutOfSupport) {
  const Environment chain = oracle::chain_environment(3);
  OnlineConfig cfg;
  EnvironmentEstimate est(chain.supports());
  const Matrix before = est.t_hat(0);
  EXPECT_FALSE(update_transitions(est, 0, 0, 2, cfg));
  EXPECT_EQ(est.t_hat(0), before);
  EXPECT_EQ(est.counts(0).sum(), 0);

  cfg.out_of_support = OutOfSupport::Widen;
  EXPECT_TRUE(update_transitions(est, 0, 0, 2, cfg));
  EXPECT_TRUE(est.support(0)(2, 0));
  EXPECT_DOUBLE_EQ(est.t_hat(0)(2, 0), 1.0);
  expect_valid(est);
}

TEST(UpdateTransitions, RejectsBadIndices) {
  EnvironmentEstimate est = EnvironmentEstimate::uninformed(3, 2);
  EXPECT_THROW(update_transitions(est, 3, 0, 0, {}), std::out_of_range);
  EXPECT_THROW(update_transitions(est, 0, 2, 0, {}), std::out_of_range);
}

TEST(EnvironmentEstimate, MakeAbsorbing) {
  EnvironmentEstimate est = EnvironmentEstimate::uninformed(3, 2);
  est.make_absorbing(1);
  for (int k = 0; k < 2; ++k) EXPECT_EQ(Vector(est.t_hat(k).col(1)), Vector::Unit(3, 1));
  expect_valid(est);
}

TEST(EnvironmentEstimate, InvariantsHoldAfterEveryUpdate) {
  Rng rng(4);
  const Environment truth = random_environment(5, 3, rng);
  for (auto mode : {EstimationMode::Counts, EstimationMode::Rate}) {
    OnlineConfig cfg;
    cfg.mode = mode;
    cfg.learning_rate = 0.3;
    EnvironmentEstimate est = EnvironmentEstimate::uninformed(5, 3);
    for (int t = 0; t < 500; ++t) {
      const int s = static_cast<int>(uniform01(rng) * 5);
      const int a = static_cast<int>(uniform01(rng) * 3);
      const auto col = truth.transition(a).col(s);
      update_transitions(est, s, a, sample_weighted({col.data(), 5}, rng), cfg);
      expect_valid(est);
    }
  }
}

TEST(EnvironmentEstimate, CountsMatchIndependentTally) {
  Rng rng(5);
  const Environment truth = random_environment(4, 2, rng);
  EnvironmentEstimate est = EnvironmentEstimate::uninformed(4, 2);
  std::map<Triple, int> tally;
  std::map<std::pair<int, int>, int> totals;
  for (int t = 0; t < 2000; ++t) {
    const int s = static_cast<int>(uniform01(rng) * 4);
    const int a = static_cast<int>(uniform01(rng) * 2);
    const auto col = truth.transition(a).col(s);
    const int next = sample_weighted({col.data(), 4}, rng);
    update_transitions(est, s, a, next, {});
    ++tally[{s, a, next}];
    ++totals[{s, a}];
  }
  for (int a = 0; a < 2; ++a) {
    for (int s = 0; s < 4; ++s) {
      for (int j = 0; j < 4; ++j) {
        const auto it = tally.find({s, a, j});
        const double expect =
            it == tally.end() ? 0.0 : static_cast<double>(it->second) / totals[{s, a}];
        EXPECT_NEAR(est.t_hat(a)(j, s), expect, 1e-15);
      }
    }
  }
}

TEST(EnvironmentEstimate, DependsOnlyOnObservedTriples) {
  Rng rng(6);
  std::vector<Triple> trace;
  for (int t = 0; t < 300; ++t) {
    trace.emplace_back(static_cast<int>(uniform01(rng) * 5), static_cast<int>(uniform01(rng) * 2),
                       static_cast<int>(uniform01(rng) * 5));
  }
  std::vector<Triple> shuffled = trace;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  EnvironmentEstimate a = EnvironmentEstimate::uninformed(5, 2);
  EnvironmentEstimate b = EnvironmentEstimate::uninformed(5, 2);
  for (const auto& [s, k, n] : trace) update_transitions(a, s, k, n, {});
  for (const auto& [s, k, n] : shuffled) update_transitions(b, s, k, n, {});
  for (int k = 0; k < 2; ++k) {
    EXPECT_EQ(a.t_hat(k), b.t_hat(k));
    EXPECT_EQ(a.counts(k), b.counts(k));
  }
}

TEST(OnlineConfig, Validation) {
  OnlineConfig cfg;
  cfg.exploration = 1.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.mode = EstimationMode::Rate;
  cfg.learning_rate = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.plan_steps_per_action = -1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(OnlineRun, RandomWalkLearnsMaze) {
  const MazeFixture fx = load_maze_fixture(kData / "mazes" / "maze6.txt");
  const MazeEnvironment m = build_maze_env(fx.maze);
  Rng env_rng(8);
  OnlineConfig cfg;
  cfg.plan_steps_per_action = 0;
  cfg.exploration = 1.0;
  cfg.max_total_steps = 20000;
  cfg.rng_seed = 9;
  EnvironmentEstimate est = EnvironmentEstimate::uninformed(m.env.n_states(), 4);
  est.make_absorbing(m.goal_state);
  const OnlineResult run = online_grep_run(maze_step(m, env_rng), std::move(est),
                                           Policy::uniform(4, m.env.n_states()), m.s0,
                                           {m.goal_state}, cfg, &m.env);
  EXPECT_EQ(run.steps.size(), 20000u);
  EXPECT_LE(run.estimate.max_abs_error(m.env), 0.05);
  EXPECT_EQ(run.estimate.rewards(), m.r.values());
  // Episodes end at the goal or at the step cap.
  for (std::size_t e = 0; e + 1 < run.episodes.size(); ++e) {
    EXPECT_TRUE(run.episodes[e].reached_goal || run.episodes[e].length == cfg.max_episode_steps);
  }
  ASSERT_TRUE(run.steps.back().model_error.has_value());

  const OptimizationTrace plan =
      grep_optimize(run.estimate.to_environment(), run.policy, m.s0,
                    run.estimate.reward_vector(), {});
  const EvaluationStats mpp =
      evaluate_policy(m.env, {SamplerKind::MaximumProbable}, plan.final_policy(), m.start_state,
                      {m.goal_state}, 1, 500, 1);
  EXPECT_EQ(mpp.max, fx.shortest_path);
}

TEST(OnlineRun, ReproducibleTrace) {
  const MazeEnvironment m = build_maze_env(load_maze_fixture(kData / "mazes" / "maze6.txt").maze);
  OnlineConfig cfg;
  cfg.max_total_steps = 400;
  cfg.rng_seed = 10;
  auto run = [&] {
    Rng env_rng(11);
    EnvironmentEstimate est = EnvironmentEstimate::uninformed(m.env.n_states(), 4);
    est.make_absorbing(m.goal_state);
    return online_grep_run(maze_step(m, env_rng), std::move(est),
                           Policy::uniform(4, m.env.n_states()), m.s0, {m.goal_state}, cfg);
  };
  const OnlineResult a = run();
  const OnlineResult b = run();
  ASSERT_EQ(a.steps.size(), b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    EXPECT_EQ(a.steps[i].state, b.steps[i].state);
    EXPECT_EQ(a.steps[i].action, b.steps[i].action);
    EXPECT_FALSE(a.steps[i].model_error.has_value());
  }
  EXPECT_EQ(a.policy.probs(), b.policy.probs());
}

TEST(OnlineRun, PlanningShortensEpisodes) {
  const MazeFixture fx = load_maze_fixture(kData / "mazes" / "maze6.txt");
  const MazeEnvironment m = build_maze_env(fx.maze);
  OnlineConfig cfg;
  cfg.max_episodes = 40;
  cfg.max_total_steps = 1000000;
  cfg.rng_seed = 12;
  cfg.planner.center_gradient = true;
  Rng env_rng(13);
  EnvironmentEstimate est = EnvironmentEstimate::uninformed(m.env.n_states(), 4);
  est.make_absorbing(m.goal_state);
  const OnlineResult run = online_grep_run(maze_step(m, env_rng), std::move(est),
                                           Policy::uniform(4, m.env.n_states()), m.s0,
                                           {m.goal_state}, cfg);
  ASSERT_EQ(run.episodes.size(), 40u);
  double last10 = 0.0;
  for (std::size_t e = 30; e < 40; ++e) {
    EXPECT_TRUE(run.episodes[e].reached_goal);
    last10 += run.episodes[e].length;
  }
  // Exploration keeps episodes above L*, but far below a random walk.
  EXPECT_LT(last10 / 10.0, 2.0 * fx.shortest_path);
  EXPECT_GE(last10 / 10.0, fx.shortest_path);
}

TEST(OnlineRun, StartOnGoalStops) {
  const Environment chain = oracle::chain_environment(3);
  OnlineConfig cfg;
  cfg.max_total_steps = 100;
  const StepFunction step = [](int, int) -> StepOutcome { throw std::logic_error("no steps"); };
  const OnlineResult run =
      online_grep_run(step, EnvironmentEstimate::uninformed(3, 1), Policy::uniform(1, 3),
                      StateDistribution::one_hot(3, 2), {2}, cfg);
  EXPECT_TRUE(run.steps.empty());
  ASSERT_EQ(run.episodes.size(), 1u);
  EXPECT_EQ(run.episodes[0].length, 0);
  EXPECT_THROW(online_grep_run(step, EnvironmentEstimate::uninformed(3, 1), Policy::uniform(2, 3),
                               StateDistribution::one_hot(3, 2), {2}, cfg),
               std::invalid_argument);
}
