#include "grep/exact_planner.hpp"
#include "grep/maze.hpp"
#include "grep/random.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

using namespace grep;

namespace {

const std::filesystem::path kData = GREP_DATA_DIR;

/// Central differences over raw policy entries through the inverse oracle.
Matrix fd_policy_gradient(const Environment& env, const Policy& p, const Vector& s0,
                          const Vector& r, double gamma, double h) {
  Matrix g(p.n_actions(), p.n_states());
  for (int k = 0; k < p.n_actions(); ++k) {
    for (int i = 0; i < p.n_states(); ++i) {
      Matrix up = p.probs();
      Matrix down = p.probs();
      up(k, i) += h;
      down(k, i) -= h;
      const double hu = oracle::objective_by_inverse(
          oracle::projection_by_entries(env.transitions(), up), s0, r, gamma);
      const double hd = oracle::objective_by_inverse(
          oracle::projection_by_entries(env.transitions(), down), s0, r, gamma);
      g(k, i) = (hu - hd) / (2.0 * h);
    }
  }
  return g;
}

ProjectionMatrix single_state() { return ProjectionMatrix(Matrix::Ones(1, 1)); }

}  // namespace

TEST(SolveOccupancy, ZeroDiscountIsStart) {
  Rng rng(1);
  const ProjectionMatrix f = random_projection(5, rng);
  const StateDistribution s0 = random_distribution(5, rng);
  EXPECT_EQ(solve_occupancy(f, s0, 0.0).values, s0.values());
}

TEST(SolveOccupancy, SingleStateGeometricSeries) {
  const Vector z = solve_occupancy(single_state(), StateDistribution(Vector::Ones(1)), 0.5).values;
  EXPECT_NEAR(z[0], 2.0, 1e-15);
}

TEST(SolveOccupancy, MatchesNeumannSeries) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const ProjectionMatrix f = random_projection(5, rng);
    const StateDistribution s0 = random_distribution(5, rng);
    const Vector z = solve_occupancy(f, s0, 0.9).values;
    const Vector series = oracle::neumann_sum(f.values(), s0.values(), 0.9, 400);
    EXPECT_LT((z - series).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(SolveOccupancy, RejectsBadInput) {
  Rng rng(3);
  const ProjectionMatrix f = random_projection(4, rng);
  EXPECT_THROW(solve_occupancy(f, StateDistribution::one_hot(3, 0), 0.9), std::invalid_argument);
  EXPECT_THROW(solve_occupancy(f, StateDistribution::one_hot(4, 0), 1.0), std::invalid_argument);
}

TEST(SolveAdjoint, ZeroDiscountIsReward) {
  Rng rng(4);
  const ProjectionMatrix f = random_projection(5, rng);
  const RewardVector r = random_rewards(5, rng);
  EXPECT_EQ(solve_adjoint(f, r, 0.0).values, r.values());
}

TEST(SolveAdjoint, SingleStateGeometricSeries) {
  const Vector q = solve_adjoint(single_state(), RewardVector(Vector::Constant(1, 3.0)), 0.5).values;
  EXPECT_NEAR(q[0], 6.0, 1e-14);
}

TEST(SolveAdjoint, MatchesTransposedNeumannSeries) {
  Rng rng(5);
  const ProjectionMatrix f = random_projection(6, rng);
  const RewardVector r = random_rewards(6, rng);
  const Vector series = oracle::neumann_sum(f.values().transpose(), r.values(), 0.9, 400);
  EXPECT_LT((solve_adjoint(f, r, 0.9).values - series).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Solves, ConservationAndDuality) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 12;
    const double gamma = 0.5 + 0.49 * uniform01(rng);
    const ProjectionMatrix f = random_projection(n, rng);
    const StateDistribution s0 = random_distribution(n, rng);
    const RewardVector r = random_rewards(n, rng);
    const Vector z = solve_occupancy(f, s0, gamma).values;
    const Vector q = solve_adjoint(f, r, gamma).values;
    EXPECT_NEAR(z.sum(), 1.0 / (1.0 - gamma), 1e-6);
    EXPECT_NEAR(r.values().dot(z), q.dot(s0.values()), 1e-10);
  }
}

TEST(Objective, TrivialCases) {
  Rng rng(7);
  const Environment env = random_environment(4, 2, rng);
  const Policy p = random_policy(2, 4, rng);
  const StateDistribution s0 = random_distribution(4, rng);
  const RewardVector r = random_rewards(4, rng);
  EXPECT_EQ(evaluate_objective(env, p, s0, RewardVector(Vector::Zero(4)), 0.9), 0.0);
  EXPECT_NEAR(evaluate_objective(env, p, s0, r, 0.0), r.values().dot(s0.values()), 1e-15);
}

TEST(Objective, MazeUniformPolicyMatchesSeries) {
  const MazeFixture fx = load_maze_fixture(kData / "mazes" / "maze10.txt");
  const MazeEnvironment m = build_maze_env(fx.maze);
  const Policy p = Policy::uniform(4, m.env.n_states());
  const double h = evaluate_objective(m.env, p, m.s0, m.r, 0.95);
  const Matrix f = oracle::projection_by_entries(m.env.transitions(), p.probs());
  const Vector series = oracle::neumann_sum(f, m.s0.values(), 0.95, 1500);
  EXPECT_NEAR(h, m.r.values().dot(series), 1e-8);
}

TEST(PolicyGradient, ZeroCases) {
  Rng rng(8);
  const Environment env = random_environment(4, 3, rng);
  const ProjectionMatrix f = build_projection(env, random_policy(3, 4, rng));
  const StateDistribution s0 = random_distribution(4, rng);
  const RewardVector r = random_rewards(4, rng);
  const auto z = solve_occupancy(f, s0, 0.9);
  const auto q = solve_adjoint(f, r, 0.9);
  EXPECT_EQ(policy_gradient(env, z, q, 0.0).max_abs(), 0.0);
  const auto q0 = solve_adjoint(f, RewardVector(Vector::Zero(4)), 0.9);
  EXPECT_EQ(policy_gradient(env, z, q0, 0.9).max_abs(), 0.0);
}

TEST(PolicyGradient, MatchesIndependentFiniteDifferences) {
  Rng rng(9);
  for (double gamma : {0.5, 0.9, 0.99}) {
    for (int trial = 0; trial < 7; ++trial) {
      const int n = 2 + static_cast<int>(uniform01(rng) * 9);
      const int k = 1 + static_cast<int>(uniform01(rng) * 4);
      const Environment env = random_environment(n, k, rng);
      const Policy p = random_policy(k, n, rng);
      const StateDistribution s0 = random_distribution(n, rng);
      const RewardVector r = random_rewards(n, rng);
      const ProjectionMatrix f = build_projection(env, p);
      const Matrix g =
          policy_gradient(env, solve_occupancy(f, s0, gamma), solve_adjoint(f, r, gamma), gamma)
              .values;
      const Matrix fd = fd_policy_gradient(env, p, s0.values(), r.values(), gamma, 1e-5);
      EXPECT_LE((g - fd).cwiseAbs().maxCoeff(), 1e-4 * (1.0 + g.cwiseAbs().maxCoeff()))
          << "gamma " << gamma << " n " << n << " k " << k;
    }
  }
}

TEST(FiniteDifference, AgreesWithOracleAndAdjoint) {
  Rng rng(10);
  const Environment env = random_environment(6, 3, rng);
  const Policy p = random_policy(3, 6, rng);
  const StateDistribution s0 = random_distribution(6, rng);
  const RewardVector r = random_rewards(6, rng);
  const Matrix fd =
      finite_difference_gradient(env, p, s0, r, DiscountConfig::same(0.9), 1e-5).values;
  EXPECT_LT((fd - fd_policy_gradient(env, p, s0.values(), r.values(), 0.9, 1e-5))
                .cwiseAbs()
                .maxCoeff(),
            1e-7);
  const ProjectionMatrix f = build_projection(env, p);
  const Matrix g =
      policy_gradient(env, solve_occupancy(f, s0, 0.9), solve_adjoint(f, r, 0.9), 0.9).values;
  EXPECT_LT((fd - g).cwiseAbs().maxCoeff(), 1e-4 * (1.0 + g.cwiseAbs().maxCoeff()));
}

TEST(FiniteDifference, ZeroDiscountGivesZero) {
  Rng rng(11);
  const Environment env = random_environment(4, 2, rng);
  const Matrix fd = finite_difference_gradient(env, random_policy(2, 4, rng),
                                               random_distribution(4, rng), random_rewards(4, rng),
                                               DiscountConfig::same(0.0), 1e-5)
                        .values;
  EXPECT_LT(fd.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(FiniteDifference, ErrorShrinksQuadratically) {
  Rng rng(12);
  const Environment env = random_environment(5, 2, rng);
  const Policy p = random_policy(2, 5, rng);
  const StateDistribution s0 = random_distribution(5, rng);
  const RewardVector r = random_rewards(5, rng);
  const ProjectionMatrix f = build_projection(env, p);
  const Matrix g =
      policy_gradient(env, solve_occupancy(f, s0, 0.9), solve_adjoint(f, r, 0.9), 0.9).values;
  const auto err = [&](double h) {
    return (finite_difference_gradient(env, p, s0, r, DiscountConfig::same(0.9), h).values - g)
        .cwiseAbs()
        .maxCoeff();
  };
  const double coarse = err(1e-2);
  const double fine = err(1e-3);
  // O(h^2): a tenfold smaller step cuts the error by about 100.
  EXPECT_LT(fine, coarse / 30.0);
  EXPECT_GT(coarse, 0.0);
}

TEST(GrepStep, IdenticalActionsKeepUniformPolicy) {
  Rng rng(13);
  const ProjectionMatrix f = random_projection(5, rng);
  const Environment env({f.values(), f.values(), f.values()});
  const Policy u = Policy::uniform(3, 5);
  const StepResult s = grep_step(env, u, random_distribution(5, rng), random_rewards(5, rng), {});
  EXPECT_LT((s.policy.probs() - u.probs()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(GrepStep, ZeroRewardLeavesPolicy) {
  Rng rng(14);
  const Environment env = random_environment(4, 2, rng);
  const Policy p = random_policy(2, 4, rng);
  const StepResult s =
      grep_step(env, p, random_distribution(4, rng), RewardVector(Vector::Zero(4)), {});
  EXPECT_EQ(s.policy.probs(), p.probs());
  EXPECT_EQ(s.h_before, 0.0);
  EXPECT_EQ(s.h_after, 0.0);
}

TEST(GrepStep, NeverDecreasesObjectiveWithLineSearch) {
  Rng rng(15);
  for (int trial = 0; trial < 30; ++trial) {
    const Environment env = random_environment(6, 3, rng);
    const Policy p = random_policy(3, 6, rng);
    const StateDistribution s0 = random_distribution(6, rng);
    const RewardVector r = random_rewards(6, rng);
    GrepConfig cfg;
    cfg.step_size = 50.0;
    const StepResult s = grep_step(env, p, s0, r, cfg);
    EXPECT_GE(s.h_after, s.h_before);
    EXPECT_NEAR(s.h_after, evaluate_objective(env, s.policy, s0, r, 0.95), 1e-12);
  }
}

TEST(GrepOptimize, SingleIterationMatchesStep) {
  Rng rng(16);
  const Environment env = random_environment(5, 2, rng);
  const Policy p = random_policy(2, 5, rng);
  const StateDistribution s0 = random_distribution(5, rng);
  const RewardVector r = random_rewards(5, rng);
  GrepConfig cfg;
  cfg.max_iterations = 1;
  const OptimizationTrace trace = grep_optimize(env, p, s0, r, cfg);
  const StepResult step = grep_step(env, p, s0, r, cfg);
  ASSERT_EQ(trace.entries.size(), 1u);
  EXPECT_EQ(trace.final_policy().probs(), step.policy.probs());
  EXPECT_EQ(trace.entries[0].h, step.h_after);
  EXPECT_EQ(trace.initial_h, step.h_before);
}

TEST(GrepOptimize, StopsOnSmallGradient) {
  Rng rng(17);
  const ProjectionMatrix f = random_projection(4, rng);
  const Environment env({f.values(), f.values()});
  GrepConfig cfg;
  cfg.gradient_tolerance = 1e-3;
  const OptimizationTrace trace =
      grep_optimize(env, Policy::uniform(2, 4), random_distribution(4, rng),
                    RewardVector(Vector::Zero(4)), cfg);
  EXPECT_EQ(trace.entries.size(), 1u);
}

TEST(GrepOptimize, MazeTraceNondecreasingAndShortestPath) {
  const MazeFixture fx = load_maze_fixture(kData / "mazes" / "maze10.txt");
  const MazeEnvironment m = build_maze_env(fx.maze);
  GrepConfig cfg;
  cfg.max_iterations = 50;
  const OptimizationTrace trace =
      grep_optimize(m.env, Policy::uniform(4, m.env.n_states()), m.s0, m.r, cfg);
  double prev = trace.initial_h;
  for (const TraceEntry& e : trace.entries) {
    EXPECT_GE(e.h, prev) << "iteration " << e.iteration;
    prev = e.h;
  }
  const EvaluationStats mpp = evaluate_policy(m.env, {SamplerKind::MaximumProbable},
                                              trace.final_policy(), m.start_state,
                                              {m.goal_state}, 1, 500, 1);
  const auto bfs = oracle::bfs_distance(fx.maze.grid(), fx.maze.start(), fx.maze.goal());
  ASSERT_TRUE(bfs.has_value());
  EXPECT_EQ(mpp.max, *bfs);
  EXPECT_EQ(mpp.timeouts, 0);
}

TEST(GrepOptimize, DistinctDiscountsStillAscend) {
  const MazeFixture fx = load_maze_fixture(kData / "mazes" / "maze6.txt");
  const MazeEnvironment m = build_maze_env(fx.maze);
  GrepConfig cfg;
  cfg.discounts = {0.9, 0.97};
  cfg.max_iterations = 20;
  const OptimizationTrace trace =
      grep_optimize(m.env, Policy::uniform(4, m.env.n_states()), m.s0, m.r, cfg);
  EXPECT_GT(trace.entries.back().h, trace.initial_h);
}

TEST(GrepStep, CenteredDirectionSharpensPeakedPolicy) {
  // One state, two actions into states paying 1 and 0.9. P already favours
  // the better action; the raw gradient step pulls it back toward G's own
  // profile, the centered one moves further toward the better action.
  Matrix t0 = Matrix::Zero(3, 3), t1 = Matrix::Zero(3, 3);
  t0(1, 0) = 1.0;
  t1(2, 0) = 1.0;
  t0(1, 1) = t1(1, 1) = 1.0;
  t0(2, 2) = t1(2, 2) = 1.0;
  const Environment env({t0, t1});
  Matrix p(2, 3);
  p << 0.9, 0.5, 0.5, 0.1, 0.5, 0.5;
  Vector rv(3);
  rv << 0.0, 1.0, 0.9;
  const StateDistribution s0 = StateDistribution::one_hot(3, 0);
  GrepConfig cfg;
  cfg.step_size = 10.0;
  const StepResult raw = grep_step(env, Policy(p), s0, RewardVector(rv), cfg);
  cfg.center_gradient = true;
  const StepResult centered = grep_step(env, Policy(p), s0, RewardVector(rv), cfg);
  EXPECT_GT(centered.h_after, raw.h_after);
  EXPECT_GT(centered.policy(0, 0), 0.9);
  EXPECT_GE(raw.h_after, raw.h_before);
}

TEST(GrepOptimize, CenteredMazeRunApproachesOptimum) {
  const MazeFixture fx = load_maze_fixture(kData / "mazes" / "maze10.txt");
  const MazeEnvironment m = build_maze_env(fx.maze);
  GrepConfig cfg;
  cfg.center_gradient = true;
  cfg.max_iterations = 40;
  const OptimizationTrace trace =
      grep_optimize(m.env, Policy::uniform(4, m.env.n_states()), m.s0, m.r, cfg);
  double prev = trace.initial_h;
  for (const TraceEntry& e : trace.entries) {
    EXPECT_GE(e.h, prev);
    prev = e.h;
  }
  // Deterministic shortest path: H* = gamma^L* / (1 - gamma).
  const double optimum = std::pow(0.95, fx.shortest_path) / 0.05;
  EXPECT_LE(prev, optimum + 1e-9);
  EXPECT_GT(prev, 0.9 * optimum);
}

TEST(GrepConfig, Validation) {
  GrepConfig cfg;
  cfg.backtrack = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.step_size = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.max_iterations = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Mpp, ExamplesAndTies) {
  Matrix p(3, 3);
  p << 1, 0.25, 1.0 / 3, 0, 0.25, 1.0 / 3, 0, 0.5, 1.0 / 3;
  EXPECT_EQ(mpp_policy(Policy(p)), (std::vector<int>{0, 2, 0}));
}

TEST(Mpp, InvariantToColumnScaling) {
  Rng rng(18);
  for (int trial = 0; trial < 50; ++trial) {
    const Policy p = random_policy(4, 6, rng);
    Matrix scaled = p.probs();
    for (int i = 0; i < 6; ++i) scaled.col(i) *= 0.1 + 10.0 * uniform01(rng);
    EXPECT_EQ(mpp_policy(project_policy(scaled)), mpp_policy(p));
  }
}

TEST(Anneal, Examples) {
  Matrix col(2, 1);
  col << 0.6, 0.4;
  const Policy p(col);
  EXPECT_EQ(anneal_policy(p, 1.0).probs(), p.probs());
  const Policy a4 = anneal_policy(p, 4.0);
  EXPECT_NEAR(a4(0, 0), 0.1296 / 0.1552, 1e-12);
  EXPECT_NEAR(a4(1, 0), 0.0256 / 0.1552, 1e-12);
  EXPECT_GE(anneal_policy(p, 64.0)(0, 0), 0.999);
  EXPECT_THROW(anneal_policy(p, 0.0), std::invalid_argument);
}

TEST(Anneal, PreservesArgmax) {
  Rng rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    const Policy p = random_policy(4, 7, rng);
    EXPECT_EQ(mpp_policy(anneal_policy(p, 1.0 + 10.0 * uniform01(rng))), mpp_policy(p));
  }
}

TEST(Anneal, HandlesTinyEntries) {
  Matrix col(2, 1);
  col << 1e-200, 1.0 - 1e-200;
  const Policy a = anneal_policy(Policy(col), 50.0);
  EXPECT_EQ(a(1, 0), 1.0);
}

TEST(EvaluatePolicy, CorridorMpp) {
  const Environment env = oracle::chain_environment(3);
  const EvaluationStats s = evaluate_policy(env, {SamplerKind::MaximumProbable},
                                            Policy::uniform(1, 3), 0, {2}, 5, 10, 1);
  EXPECT_EQ(s.mean, 2.0);
  EXPECT_EQ(s.min, 2);
  EXPECT_EQ(s.max, 2);
  EXPECT_EQ(s.timeouts, 0);
}

TEST(EvaluatePolicy, ReproducibleAndScoresTimeouts) {
  const MazeFixture fx = load_maze_fixture(kData / "mazes" / "maze10.txt");
  const MazeEnvironment m = build_maze_env(fx.maze);
  const Policy u = Policy::uniform(4, m.env.n_states());
  const SamplerSpec pw{SamplerKind::ProbabilityWeighted};
  const EvaluationStats a = evaluate_policy(m.env, pw, u, m.start_state, {m.goal_state}, 20, 500, 3);
  const EvaluationStats b = evaluate_policy(m.env, pw, u, m.start_state, {m.goal_state}, 20, 500, 3);
  EXPECT_EQ(a.lengths, b.lengths);
  EXPECT_GT(a.mean, fx.shortest_path);
  double sum = 0.0;
  int timeouts = 0;
  for (int len : a.lengths) {
    sum += len;
    timeouts += len == 500;
    EXPECT_GE(len, fx.shortest_path);
  }
  EXPECT_DOUBLE_EQ(a.mean, sum / 20.0);
  EXPECT_EQ(a.timeouts, timeouts);
}
