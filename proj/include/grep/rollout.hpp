#pragma once

#include "grep/mdp.hpp"
#include "grep/random.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace grep {

/// Chooses an action for a state. The stream is owned by the rollout so a
/// stochastic sampler stays reproducible from the rollout seed.
using ActionSampler = std::function<int(int state, Rng& rng)>;

struct PathRecord {
  std::vector<int> states;   // visited states, start included
  std::vector<int> actions;  // one per step taken
  int length = 0;            // number of actions taken
  bool timed_out = false;

  bool operator==(const PathRecord&) const = default;
};

/// Simulates env from `start` until an absorbing state is entered or
/// max_steps actions were taken. `absorbing` has one flag per state.
PathRecord rollout(const Environment& env, const ActionSampler& sampler, int start,
                   const std::vector<bool>& absorbing, int max_steps, std::uint64_t rng_seed);

}  // namespace grep
