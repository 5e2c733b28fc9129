#include "grep/rollout.hpp"

#include <stdexcept>
#include <string>

namespace grep {

PathRecord rollout(const Environment& env, const ActionSampler& sampler, int start,
                   const std::vector<bool>& absorbing, int max_steps, std::uint64_t rng_seed) {
  const int n = env.n_states();
  if (start < 0 || start >= n) throw std::invalid_argument("rollout: start out of range");
  if (max_steps < 1) throw std::invalid_argument("rollout: max_steps must be >= 1");
  if (static_cast<int>(absorbing.size()) != n)
    throw std::invalid_argument("rollout: absorbing flags must cover every state");

  Rng rng(rng_seed);
  PathRecord path;
  path.states.push_back(start);
  int state = start;
  while (!absorbing[state]) {
    if (path.length == max_steps) {
      path.timed_out = true;
      break;
    }
    const int action = sampler(state, rng);
    if (action < 0 || action >= env.n_actions())
      throw std::out_of_range("rollout: sampler returned action " + std::to_string(action));
    const auto column = env.transition(action).col(state);
    state = sample_weighted({column.data(), static_cast<std::size_t>(n)}, rng);
    path.actions.push_back(action);
    path.states.push_back(state);
    ++path.length;
  }
  return path;
}

}  // namespace grep
