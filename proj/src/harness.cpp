#include "grep/harness.hpp"

#include "grep/implicit_planner.hpp"
#include "grep/maze.hpp"
#include "grep/mc_estimators.hpp"
#include "grep/random.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <stdexcept>

#ifndef GREP_DATA_DIR
#define GREP_DATA_DIR "data"
#endif

namespace grep::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& section,
                    std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw std::invalid_argument("config: '" + section + "' must be an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!keys.contains(key))
      throw std::invalid_argument("config: unknown key '" + key + "' in '" + section + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& target) {
  if (obj.contains(key)) target = obj.at(key).get<T>();
}

PolicyInit parse_init(const std::string& s) {
  if (s == "uniform") return PolicyInit::Uniform;
  if (s == "random") return PolicyInit::Random;
  throw std::invalid_argument("config: init must be 'uniform' or 'random', got '" + s + "'");
}

Policy initial_policy(PolicyInit init, int n_actions, int n_states, std::uint64_t seed) {
  if (init == PolicyInit::Uniform) return Policy::uniform(n_actions, n_states);
  Rng rng(derive_seed(seed, 0x1417));
  return random_policy(n_actions, n_states, rng);
}

std::ofstream open_output(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  return out;
}

void close_output(std::ofstream& out, const std::string& name) {
  out.close();
  if (!out) throw std::runtime_error("failed writing " + name);
}

std::string num(double v) { return format_number(v); }

MazeFixture fixture_for(const ExperimentConfig& cfg, const std::string& command) {
  return load_maze_fixture(cfg.maze ? *cfg.maze : default_maze(command));
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

fs::path data_dir() { return fs::path(GREP_DATA_DIR); }

fs::path default_maze(const std::string& command) {
  if (command == "mc" || command == "online") return data_dir() / "mazes" / "maze6.txt";
  return data_dir() / "mazes" / "maze10.txt";
}

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
  reject_unknown(doc, "<root>",
                 {"maze", "seed", "out", "discounts", "grep", "evaluation", "plan", "curves",
                  "fdcheck", "mc", "online"});
  ExperimentConfig cfg;
  if (doc.contains("maze")) cfg.maze = doc.at("maze").get<std::string>();
  read(doc, "seed", cfg.seed);
  if (doc.contains("out")) cfg.out = doc.at("out").get<std::string>();

  if (doc.contains("discounts")) {
    const json& d = doc.at("discounts");
    reject_unknown(d, "discounts", {"gamma_z", "gamma_q"});
    read(d, "gamma_z", cfg.grep.discounts.gamma_z);
    read(d, "gamma_q", cfg.grep.discounts.gamma_q);
  }
  if (doc.contains("grep")) {
    const json& g = doc.at("grep");
    reject_unknown(g, "grep",
                   {"step_size", "line_search", "backtrack", "max_halvings", "max_iterations",
                    "gradient_tolerance", "center_gradient"});
    read(g, "step_size", cfg.grep.step_size);
    read(g, "line_search", cfg.grep.line_search);
    read(g, "backtrack", cfg.grep.backtrack);
    read(g, "max_halvings", cfg.grep.max_halvings);
    read(g, "max_iterations", cfg.grep.max_iterations);
    read(g, "gradient_tolerance", cfg.grep.gradient_tolerance);
    read(g, "center_gradient", cfg.grep.center_gradient);
  }
  if (doc.contains("evaluation")) {
    const json& e = doc.at("evaluation");
    reject_unknown(e, "evaluation", {"n_runs", "anneal_temperature", "max_steps"});
    read(e, "n_runs", cfg.evaluation.n_runs);
    read(e, "anneal_temperature", cfg.evaluation.anneal_temperature);
    read(e, "max_steps", cfg.evaluation.max_steps);
  }
  if (doc.contains("plan")) {
    const json& p = doc.at("plan");
    reject_unknown(p, "plan", {"init"});
    if (p.contains("init")) cfg.plan_init = parse_init(p.at("init").get<std::string>());
  }
  if (doc.contains("curves")) {
    const json& c = doc.at("curves");
    reject_unknown(c, "curves", {"init", "iterations"});
    if (c.contains("init")) cfg.curves.init = parse_init(c.at("init").get<std::string>());
    read(c, "iterations", cfg.curves.iterations);
  }
  if (doc.contains("fdcheck")) {
    const json& f = doc.at("fdcheck");
    reject_unknown(f, "fdcheck", {"n_states", "n_actions", "gamma", "h", "max_entries"});
    read(f, "n_states", cfg.fdcheck.n_states);
    read(f, "n_actions", cfg.fdcheck.n_actions);
    read(f, "gamma", cfg.fdcheck.gamma);
    read(f, "h", cfg.fdcheck.h);
    read(f, "max_entries", cfg.fdcheck.max_entries);
  }
  if (doc.contains("mc")) {
    const json& m = doc.at("mc");
    reject_unknown(m, "mc", {"sample_counts", "seeds", "truncation_tolerance"});
    read(m, "sample_counts", cfg.mc.sample_counts);
    read(m, "seeds", cfg.mc.seeds);
    read(m, "truncation_tolerance", cfg.mc.truncation_tolerance);
  }
  if (doc.contains("online")) {
    const json& o = doc.at("online");
    reject_unknown(o, "online",
                   {"plan_steps_per_action", "mode", "learning_rate", "exploration",
                    "max_total_steps", "max_episode_steps", "max_episodes", "out_of_support",
                    "average_rewards"});
    read(o, "plan_steps_per_action", cfg.online.plan_steps_per_action);
    read(o, "learning_rate", cfg.online.learning_rate);
    read(o, "exploration", cfg.online.exploration);
    read(o, "max_total_steps", cfg.online.max_total_steps);
    read(o, "max_episode_steps", cfg.online.max_episode_steps);
    read(o, "max_episodes", cfg.online.max_episodes);
    read(o, "average_rewards", cfg.online.average_rewards);
    if (o.contains("mode")) {
      const auto mode = o.at("mode").get<std::string>();
      if (mode == "counts") {
        cfg.online.mode = EstimationMode::Counts;
      } else if (mode == "rate") {
        cfg.online.mode = EstimationMode::Rate;
      } else {
        throw std::invalid_argument("config: online.mode must be 'counts' or 'rate'");
      }
    }
    if (o.contains("out_of_support")) {
      const auto s = o.at("out_of_support").get<std::string>();
      if (s == "reject") {
        cfg.online.out_of_support = OutOfSupport::Reject;
      } else if (s == "widen") {
        cfg.online.out_of_support = OutOfSupport::Widen;
      } else {
        throw std::invalid_argument("config: online.out_of_support must be 'reject' or 'widen'");
      }
    }
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return from_json(json::parse(in));
}

PlanSummary cmd_plan(const ExperimentConfig& cfg) {
  const MazeFixture fixture = fixture_for(cfg, "plan");
  const MazeEnvironment m = build_maze_env(fixture.maze);
  const Policy p0 = initial_policy(cfg.plan_init, m.env.n_actions(), m.env.n_states(), cfg.seed);
  PlanSummary summary{grep_optimize(m.env, p0, m.s0, m.r, cfg.grep)};

  auto csv = open_output(cfg.out, "plan_trace.csv");
  csv << "iteration,H,gradient_norm\n";
  for (const auto& e : summary.trace.entries) {
    csv << e.iteration << ',' << num(e.h) << ',' << num(e.gradient_norm) << '\n';
  }
  close_output(csv, "plan_trace.csv");

  auto mat = open_output(cfg.out, "policy.txt");
  const Matrix& p = summary.trace.final_policy().probs();
  mat << "# policy " << p.rows() << " actions x " << p.cols() << " states; row k = p(a_k | s)\n";
  for (Eigen::Index k = 0; k < p.rows(); ++k) {
    for (Eigen::Index i = 0; i < p.cols(); ++i) mat << (i ? " " : "") << num(p(k, i));
    mat << '\n';
  }
  close_output(mat, "policy.txt");
  return summary;
}

CurvesSummary cmd_curves(const ExperimentConfig& cfg) {
  if (cfg.curves.iterations < 1) throw std::invalid_argument("curves.iterations must be >= 1");
  const MazeFixture fixture = fixture_for(cfg, "curves");
  const MazeEnvironment m = build_maze_env(fixture.maze);
  const std::vector<int> goals{m.goal_state};
  const auto& ev = cfg.evaluation;

  CurvesSummary summary;
  summary.shortest_path = fixture.shortest_path;
  Policy policy = initial_policy(cfg.curves.init, m.env.n_actions(), m.env.n_states(), cfg.seed);
  double previous_h = evaluate_objective(m.env, policy, m.s0, m.r, cfg.grep.discounts.gamma_z);
  for (int it = 1; it <= cfg.curves.iterations; ++it) {
    StepResult step = grep_step(m.env, policy, m.s0, m.r, cfg.grep);
    policy = std::move(step.policy);
    if (step.h_after < previous_h) summary.h_nondecreasing = false;
    previous_h = step.h_after;

    CurvesRow row;
    row.iteration = it;
    row.h = step.h_after;
    auto run = [&](SamplerKind kind, std::uint64_t tag) {
      return evaluate_policy(m.env, {kind, ev.anneal_temperature}, policy, m.start_state, goals,
                             ev.n_runs, ev.max_steps, derive_seed(cfg.seed, it, tag));
    };
    row.pw = run(SamplerKind::ProbabilityWeighted, 0);
    row.annealed = run(SamplerKind::AnnealedProbabilityWeighted, 1);
    row.mpp = run(SamplerKind::MaximumProbable, 2);
    if (!summary.first_optimal_iteration && row.mpp.timeouts == 0 &&
        row.mpp.max == fixture.shortest_path)
      summary.first_optimal_iteration = it;
    summary.rows.push_back(std::move(row));
  }

  auto csv = open_output(cfg.out, "curves.csv");
  csv << "# timeouts scored as max_steps=" << ev.max_steps << "; n_runs=" << ev.n_runs
      << "; anneal_temperature=" << num(ev.anneal_temperature) << '\n';
  csv << "iteration,H,pw_mean,pw_min,pw_max,pw_timeouts,annealed_mean,annealed_min,"
         "annealed_max,annealed_timeouts,mpp_mean,mpp_min,mpp_max,mpp_timeouts\n";
  for (const auto& row : summary.rows) {
    csv << row.iteration << ',' << num(row.h);
    for (const EvaluationStats* s : {&row.pw, &row.annealed, &row.mpp}) {
      csv << ',' << num(s->mean) << ',' << s->min << ',' << s->max << ',' << s->timeouts;
    }
    csv << '\n';
  }
  close_output(csv, "curves.csv");
  return summary;
}

FdCheckSummary cmd_fdcheck(const ExperimentConfig& cfg) {
  const auto& fc = cfg.fdcheck;
  if (fc.n_states < 1 || fc.n_actions < 1) throw std::invalid_argument("fdcheck: empty instance");
  if (fc.n_states * fc.n_actions > fc.max_entries) {
    throw std::invalid_argument("fdcheck: N*K = " + std::to_string(fc.n_states * fc.n_actions) +
                                " exceeds max_entries = " + std::to_string(fc.max_entries));
  }
  Rng rng(derive_seed(cfg.seed, 0xfdc));
  const Environment env = random_environment(fc.n_states, fc.n_actions, rng);
  const Policy policy = random_policy(fc.n_actions, fc.n_states, rng);
  const StateDistribution s0 = random_distribution(fc.n_states, rng);
  const RewardVector r = random_rewards(fc.n_states, rng);
  const DiscountConfig discounts = DiscountConfig::same(fc.gamma);

  const ProjectionMatrix f = build_projection(env, policy);
  const GradientMatrix g = policy_gradient(env, solve_occupancy(f, s0, fc.gamma),
                                           solve_adjoint(f, r, fc.gamma), fc.gamma);
  const GradientMatrix fd = finite_difference_gradient(env, policy, s0, r, discounts, fc.h);

  FdCheckSummary summary;
  summary.max_abs_error = (g.values - fd.values).cwiseAbs().maxCoeff();
  summary.max_abs_gradient = g.max_abs();
  summary.fd_solves = 1 + 2 * static_cast<std::int64_t>(fc.n_states) * fc.n_actions;

  auto csv = open_output(cfg.out, "fdcheck.csv");
  csv << "action,state,analytic,finite_difference,abs_error\n";
  for (int i = 0; i < fc.n_states; ++i) {
    for (int k = 0; k < fc.n_actions; ++k) {
      csv << k << ',' << i << ',' << num(g.values(k, i)) << ',' << num(fd.values(k, i)) << ','
          << num(std::abs(g.values(k, i) - fd.values(k, i))) << '\n';
    }
  }
  close_output(csv, "fdcheck.csv");

  const double tolerance = 1e-4 * (1.0 + summary.max_abs_gradient);
  json report{{"n_states", fc.n_states},
              {"n_actions", fc.n_actions},
              {"gamma", fc.gamma},
              {"h", fc.h},
              {"max_abs_error", summary.max_abs_error},
              {"max_abs_gradient", summary.max_abs_gradient},
              {"tolerance", tolerance},
              {"passed", summary.max_abs_error <= tolerance},
              {"adjoint_solves", summary.adjoint_solves},
              {"finite_difference_solves", summary.fd_solves}};
  auto out = open_output(cfg.out, "fdcheck_report.json");
  out << report.dump(2) << '\n';
  close_output(out, "fdcheck_report.json");
  return summary;
}

McSummary cmd_mc(const ExperimentConfig& cfg) {
  const auto& mc = cfg.mc;
  if (mc.sample_counts.empty() || mc.seeds < 1)
    throw std::invalid_argument("mc: need sample counts and at least one seed");
  const MazeFixture fixture = fixture_for(cfg, "mc");
  const MazeEnvironment m = build_maze_env(fixture.maze);
  const double gz = cfg.grep.discounts.gamma_z;
  const double gq = cfg.grep.discounts.gamma_q;
  const Policy policy = initial_policy(cfg.plan_init, m.env.n_actions(), m.env.n_states(), cfg.seed);
  const ProjectionMatrix f = build_projection(m.env, policy);
  const OccupancyVector z = solve_occupancy(f, m.s0, gz);
  const ExpectedRewardVector q = solve_adjoint(f, m.r, gq);
  const GradientMatrix g = policy_gradient(m.env, z, q, gq);

  McSummary summary;
  GradientMatrix largest_n_gradient;
  const std::int64_t largest_n = *std::max_element(mc.sample_counts.begin(), mc.sample_counts.end());
  for (std::int64_t n : mc.sample_counts) {
    for (int s = 0; s < mc.seeds; ++s) {
      McConfig zc{n, McConfig::horizon_for(gz, mc.truncation_tolerance),
                  derive_seed(cfg.seed, static_cast<std::uint64_t>(n), 2 * s),
                  mc.truncation_tolerance};
      McConfig qc{n, McConfig::horizon_for(gq, mc.truncation_tolerance),
                  derive_seed(cfg.seed, static_cast<std::uint64_t>(n), 2 * s + 1),
                  mc.truncation_tolerance};
      const OccupancyVector z_hat = mc_occupancy(f, m.s0, gz, zc);
      const ExpectedRewardVector q_hat = mc_adjoint(f, m.r, gq, qc);
      const GradientMatrix g_hat = mc_policy_gradient(m.env, z_hat, q_hat, gq);
      summary.rows.push_back({n, s, relative_l2_error(z_hat.values, z.values),
                              relative_l2_error(q_hat.values, q.values),
                              cosine_similarity(g_hat.values, g.values)});
      if (n == largest_n && s == 0) largest_n_gradient = g_hat;
    }
  }

  auto csv = open_output(cfg.out, "mc_errors.csv");
  csv << "n,seed,z_rel_error,q_rel_error,gradient_cosine\n";
  for (const auto& row : summary.rows) {
    csv << row.n << ',' << row.seed << ',' << num(row.z_error) << ',' << num(row.q_error) << ','
        << num(row.gradient_cosine) << '\n';
  }
  close_output(csv, "mc_errors.csv");

  auto write_quiver = [&](const std::string& name, const Matrix& weights) {
    const double top = weights.cwiseAbs().maxCoeff();
    const Matrix normalized = top > 0.0 ? Matrix(weights / top) : weights;
    const auto field = direction_field(normalized, fixture.maze);
    auto out = open_output(cfg.out, name);
    out << "# x y dx dy\n";
    for (std::size_t i = 0; i < field.size(); ++i) {
      out << m.cells[i].x << ' ' << m.cells[i].y << ' ' << num(field[i].x()) << ' '
          << num(field[i].y()) << '\n';
    }
    close_output(out, name);
    return field.size();
  };
  summary.quiver_rows = write_quiver("quiver.dat", largest_n_gradient.values);
  write_quiver("quiver_exact.dat", g.values);
  return summary;
}

OnlineSummary cmd_online(const ExperimentConfig& cfg) {
  const MazeFixture fixture = fixture_for(cfg, "online");
  const MazeEnvironment truth = build_maze_env(fixture.maze);
  const int n = truth.env.n_states();
  const int k = truth.env.n_actions();

  OnlineConfig oc = cfg.online;
  oc.planner = cfg.grep;
  oc.rng_seed = derive_seed(cfg.seed, 0x0e1);
  Rng env_rng(derive_seed(cfg.seed, 0x0e2));
  const StepFunction step = [&](int state, int action) {
    const auto col = truth.env.transition(action).col(state);
    const int next = sample_weighted({col.data(), static_cast<std::size_t>(n)}, env_rng);
    return StepOutcome{next, truth.r.values()[next]};
  };

  EnvironmentEstimate estimate = EnvironmentEstimate::uninformed(n, k);
  estimate.make_absorbing(truth.goal_state);
  const std::vector<int> goals{truth.goal_state};
  const OnlineResult run = online_grep_run(step, std::move(estimate), Policy::uniform(k, n),
                                           truth.s0, goals, oc, &truth.env);

  auto csv = open_output(cfg.out, "online_trace.csv");
  csv << "step,episode,state,action,reward,model_error\n";
  for (const auto& s : run.steps) {
    csv << s.step << ',' << s.episode << ',' << s.state << ',' << s.action << ',' << num(s.reward)
        << ',' << (s.model_error ? num(*s.model_error) : "") << '\n';
  }
  close_output(csv, "online_trace.csv");

  OnlineSummary summary;
  summary.steps = static_cast<std::int64_t>(run.steps.size());
  summary.episodes = static_cast<std::int64_t>(run.episodes.size());
  summary.model_error = run.estimate.max_abs_error(truth.env);
  summary.shortest_path = fixture.shortest_path;

  const RewardVector r_hat = run.estimate.reward_vector();
  if ((r_hat.values().array() != 0.0).any()) {
    const OptimizationTrace plan =
        grep_optimize(run.estimate.to_environment(), run.policy, truth.s0, r_hat, cfg.grep);
    const EvaluationStats mpp =
        evaluate_policy(truth.env, {SamplerKind::MaximumProbable, 1.0}, plan.final_policy(),
                        truth.start_state, goals, 1, cfg.evaluation.max_steps, cfg.seed);
    if (mpp.timeouts == 0) summary.mpp_length = mpp.max;
  }

  json report{{"steps", summary.steps},
              {"episodes", summary.episodes},
              {"max_abs_model_error", summary.model_error},
              {"mpp_length", summary.mpp_length ? json(*summary.mpp_length) : json(nullptr)},
              {"shortest_path", summary.shortest_path}};
  auto out = open_output(cfg.out, "online_report.json");
  out << report.dump(2) << '\n';
  close_output(out, "online_report.json");
  return summary;
}

}  // namespace grep::harness
