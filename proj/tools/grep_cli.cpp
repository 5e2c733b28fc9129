// Command-line front end for the gradient-based planning experiments.

#include "grep/harness.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace {

const char* kOutputs = R"(Outputs (written under --out):
  plan     plan_trace.csv  iteration,H,gradient_norm
           policy.txt      K rows (actions) x N columns (states)
  curves   curves.csv      iteration,H,pw_mean,pw_min,pw_max,pw_timeouts,
                           annealed_mean,annealed_min,annealed_max,annealed_timeouts,
                           mpp_mean,mpp_min,mpp_max,mpp_timeouts
                           (a leading '#' line records max_steps; timeouts score max_steps)
  fdcheck  fdcheck.csv     action,state,analytic,finite_difference,abs_error
           fdcheck_report.json
  mc       mc_errors.csv   n,seed,z_rel_error,q_rel_error,gradient_cosine
           quiver.dat, quiver_exact.dat   '# x y dx dy' per free cell
  online   online_trace.csv  step,episode,state,action,reward,model_error
           online_report.json)";

}  // namespace

int main(int argc, char** argv) {
  using namespace grep::harness;

  CLI::App app{"Gradient-based reinforcement planning on tabular MDPs"};
  app.footer(kOutputs);
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> maze;
  app.add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Master random seed");
  app.add_option("--out", out, "Output directory");
  app.add_option("--maze", maze, "Maze text file")->check(CLI::ExistingFile);

  std::optional<int> iterations;
  std::optional<std::string> init;
  auto* plan = app.add_subcommand("plan", "Run offline GREP and write the objective trace");
  plan->add_option("--iterations", iterations, "Maximum GREP iterations");
  plan->add_option("--init", init, "Initial policy")->check(CLI::IsMember({"uniform", "random"}));

  auto* curves = app.add_subcommand("curves", "Path length versus GREP iteration (PW, annealed PW, MPP)");
  curves->add_option("--iterations", iterations, "GREP iterations");
  curves->add_option("--init", init, "Initial policy")->check(CLI::IsMember({"uniform", "random"}));

  std::optional<int> n_states, n_actions;
  std::optional<double> gamma, h;
  auto* fdcheck = app.add_subcommand("fdcheck", "Compare the adjoint gradient with finite differences");
  fdcheck->add_option("--states", n_states, "Number of states");
  fdcheck->add_option("--actions", n_actions, "Number of actions");
  fdcheck->add_option("--gamma", gamma, "Discount factor");
  fdcheck->add_option("--fd-step", h, "Finite-difference step");

  std::optional<int> seeds;
  auto* mc = app.add_subcommand("mc", "Monte Carlo estimator error versus sample count");
  mc->add_option("--seeds", seeds, "Repetitions per sample count");

  std::optional<std::int64_t> steps;
  std::optional<int> plan_steps;
  std::optional<double> exploration;
  auto* online = app.add_subcommand("online", "Learn the environment while acting, then plan");
  online->add_option("--steps", steps, "Total environment steps");
  online->add_option("--plan-steps", plan_steps, "GREP steps before each action");
  online->add_option("--exploration", exploration, "Uniform exploration probability");

  for (auto* sub : {plan, curves, fdcheck, mc, online}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg =
        config_path.empty() ? ExperimentConfig{} : ExperimentConfig::load(config_path);
    if (seed) cfg.seed = *seed;
    if (out) cfg.out = *out;
    if (maze) cfg.maze = *maze;

    if (plan->parsed()) {
      if (iterations) cfg.grep.max_iterations = *iterations;
      if (init) cfg.plan_init = *init == "random" ? PolicyInit::Random : PolicyInit::Uniform;
      const PlanSummary s = cmd_plan(cfg);
      std::cout << "iterations " << s.trace.entries.size() << ", H "
                << format_number(s.trace.initial_h) << " -> "
                << format_number(s.trace.entries.back().h) << '\n';
    } else if (curves->parsed()) {
      if (iterations) cfg.curves.iterations = *iterations;
      if (init) cfg.curves.init = *init == "random" ? PolicyInit::Random : PolicyInit::Uniform;
      const CurvesSummary s = cmd_curves(cfg);
      const auto& last = s.rows.back();
      std::cout << "shortest path " << s.shortest_path << "; MPP optimal from iteration "
                << (s.first_optimal_iteration ? std::to_string(*s.first_optimal_iteration) : "never")
                << "; final PW " << format_number(last.pw.mean) << ", annealed "
                << format_number(last.annealed.mean) << ", MPP " << format_number(last.mpp.mean)
                << '\n';
    } else if (fdcheck->parsed()) {
      if (n_states) cfg.fdcheck.n_states = *n_states;
      if (n_actions) cfg.fdcheck.n_actions = *n_actions;
      if (gamma) cfg.fdcheck.gamma = *gamma;
      if (h) cfg.fdcheck.h = *h;
      const FdCheckSummary s = cmd_fdcheck(cfg);
      std::cout << "max |G - G_fd| = " << format_number(s.max_abs_error) << " (max |G| = "
                << format_number(s.max_abs_gradient) << "); solves: adjoint " << s.adjoint_solves
                << ", finite differences " << s.fd_solves << '\n';
    } else if (mc->parsed()) {
      if (seeds) cfg.mc.seeds = *seeds;
      const McSummary s = cmd_mc(cfg);
      std::cout << s.rows.size() << " estimates written, " << s.quiver_rows << " quiver rows\n";
    } else if (online->parsed()) {
      if (steps) cfg.online.max_total_steps = *steps;
      if (plan_steps) cfg.online.plan_steps_per_action = *plan_steps;
      if (exploration) cfg.online.exploration = *exploration;
      const OnlineSummary s = cmd_online(cfg);
      std::cout << "steps " << s.steps << ", episodes " << s.episodes << ", max model error "
                << format_number(s.model_error) << ", MPP length "
                << (s.mpp_length ? std::to_string(*s.mpp_length) : "none") << " (shortest "
                << s.shortest_path << ")\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
