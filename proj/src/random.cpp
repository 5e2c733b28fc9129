#include "grep/random.hpp"

#include <algorithm>
#include <stdexcept>

namespace grep {

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix_seed(mix_seed(seed) ^ (index * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(seed, a), b);
}

double uniform01(Rng& rng) {
  // 53 random mantissa bits; identical on every platform, unlike
  // std::uniform_real_distribution whose algorithm is unspecified.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int sample_from_cdf(std::span<const double> cdf, Rng& rng) {
  if (cdf.empty() || !(cdf.back() > 0.0)) throw std::invalid_argument("sample_from_cdf: no mass");
  const double u = uniform01(rng) * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) --it;
  // Skip zero-mass entries that share the boundary value.
  auto idx = static_cast<int>(it - cdf.begin());
  while (idx > 0 && cdf[idx] == cdf[idx - 1]) --idx;
  return idx;
}

int sample_weighted(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw std::invalid_argument("sample_weighted: no mass");
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  int last_positive = -1;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    acc += weights[k];
    last_positive = static_cast<int>(k);
    if (u < acc) return last_positive;
  }
  return last_positive;
}

namespace {

Matrix random_stochastic(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < cols; ++i) {
    for (int j = 0; j < rows; ++j) m(j, i) = uniform01(rng) + 1e-3;
    m.col(i) /= m.col(i).sum();
  }
  return m;
}

}  // namespace

Environment random_environment(int n_states, int n_actions, Rng& rng) {
  std::vector<Matrix> t;
  t.reserve(n_actions);
  for (int k = 0; k < n_actions; ++k) t.push_back(random_stochastic(n_states, n_states, rng));
  return Environment(std::move(t));
}

ProjectionMatrix random_projection(int n_states, Rng& rng) {
  return ProjectionMatrix(random_stochastic(n_states, n_states, rng));
}

Policy random_policy(int n_actions, int n_states, Rng& rng) {
  return Policy(random_stochastic(n_actions, n_states, rng));
}

StateDistribution random_distribution(int n_states, Rng& rng) {
  return StateDistribution(random_stochastic(n_states, 1, rng).col(0));
}

RewardVector random_rewards(int n_states, Rng& rng) {
  Vector r(n_states);
  for (int i = 0; i < n_states; ++i) r[i] = uniform01(rng);
  return RewardVector(std::move(r));
}

}  // namespace grep
