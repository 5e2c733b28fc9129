#pragma once

#include "grep/mdp.hpp"

#include <cstdint>
#include <random>
#include <span>

namespace grep {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Seed for sub-stream `index` of `seed`. Stable across platforms and
/// independent of thread scheduling.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

inline Rng make_stream(std::uint64_t seed, std::uint64_t index) {
  return Rng(derive_seed(seed, index));
}

/// Uniform double in [0, 1).
double uniform01(Rng& rng);

/// Inverse-CDF draw from an inclusive prefix-sum table. Entries with zero mass
/// are never returned.
int sample_from_cdf(std::span<const double> cdf, Rng& rng);

/// Draw an index proportional to nonnegative weights (need not sum to one).
int sample_weighted(std::span<const double> weights, Rng& rng);

/// Dense random environment: every T_k column is a normalized vector of
/// uniform(0,1) draws.
Environment random_environment(int n_states, int n_actions, Rng& rng);

/// Random column-stochastic N x N matrix.
ProjectionMatrix random_projection(int n_states, Rng& rng);

Policy random_policy(int n_actions, int n_states, Rng& rng);
StateDistribution random_distribution(int n_states, Rng& rng);
RewardVector random_rewards(int n_states, Rng& rng);

}  // namespace grep
