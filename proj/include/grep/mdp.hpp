#pragma once

// Core value types for finite tabular MDPs.
//
// Matrix convention, used everywhere in this library: columns index the
// source state and rows the destination state, so a belief propagates as
// s_{t+1} = F s_t. Transition entry T_k(j, i) is p(j | i, a_k) and policy
// entry P(k, i) is p(a_k | s_i).

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace grep {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Tolerance for "sums to one" checks on stochastic vectors and columns.
inline constexpr double kStochasticTolerance = 1e-9;

/// Throws std::invalid_argument unless every column of m is a probability
/// vector. `what` names the offending object in the message.
void require_column_stochastic(const Matrix& m, const char* what);

class Environment {
 public:
  /// Support defaults to the nonzero pattern of the transitions.
  explicit Environment(std::vector<Matrix> transitions);
  Environment(std::vector<Matrix> transitions, std::vector<Mask> support);

  int n_states() const { return n_states_; }
  int n_actions() const { return static_cast<int>(transitions_.size()); }

  const Matrix& transition(int action) const { return transitions_.at(action); }
  const std::vector<Matrix>& transitions() const { return transitions_; }
  const Mask& support(int action) const { return support_.at(action); }
  const std::vector<Mask>& supports() const { return support_; }

  /// True when every column of every T_k is one-hot.
  bool is_deterministic() const;

 private:
  int n_states_ = 0;
  std::vector<Matrix> transitions_;
  std::vector<Mask> support_;
};

class Policy {
 public:
  /// probs is K x N. Rejects columns that are not distributions.
  explicit Policy(Matrix probs);

  static Policy uniform(int n_actions, int n_states);

  int n_actions() const { return static_cast<int>(probs_.rows()); }
  int n_states() const { return static_cast<int>(probs_.cols()); }
  const Matrix& probs() const { return probs_; }
  double operator()(int action, int state) const { return probs_(action, state); }

 private:
  Matrix probs_;
};

class StateDistribution {
 public:
  explicit StateDistribution(Vector values);

  static StateDistribution one_hot(int n_states, int state);

  int size() const { return static_cast<int>(values_.size()); }
  const Vector& values() const { return values_; }

 private:
  Vector values_;
};

class RewardVector {
 public:
  explicit RewardVector(Vector values);

  static RewardVector one_hot(int n_states, int state, double value = 1.0);

  int size() const { return static_cast<int>(values_.size()); }
  const Vector& values() const { return values_; }

 private:
  Vector values_;
};

/// Policy-induced state kernel F(j, i) = sum_k T_k(j, i) P(k, i).
class ProjectionMatrix {
 public:
  explicit ProjectionMatrix(Matrix values);

  int n_states() const { return static_cast<int>(values_.rows()); }
  const Matrix& values() const { return values_; }

 private:
  Matrix values_;
};

struct DiscountConfig {
  double gamma_z = 0.95;
  double gamma_q = 0.95;

  static DiscountConfig same(double gamma) { return {gamma, gamma}; }
  void validate() const;
};

ProjectionMatrix build_projection(const Environment& env, const Policy& policy);

/// Clamp negatives to zero and L1-normalize each column. An all-zero column
/// becomes uniform. Throws on non-finite entries.
Policy project_policy(const Matrix& raw);

}  // namespace grep
