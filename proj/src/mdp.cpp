#include "grep/mdp.hpp"

#include "grep/kernels.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace grep {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace

void require_column_stochastic(const Matrix& m, const char* what) {
  if (!all_finite(m)) fail(std::string(what) + ": non-finite entry");
  if ((m.array() < 0.0).any()) fail(std::string(what) + ": negative entry");
  if ((m.array() > 1.0 + kStochasticTolerance).any()) fail(std::string(what) + ": entry above 1");
  for (Eigen::Index i = 0; i < m.cols(); ++i) {
    const double sum = m.col(i).sum();
    if (std::abs(sum - 1.0) > kStochasticTolerance) {
      std::ostringstream os;
      os << what << ": column " << i << " sums to " << sum;
      fail(os.str());
    }
  }
}

Environment::Environment(std::vector<Matrix> transitions)
    : Environment(transitions, [&] {
        std::vector<Mask> support;
        support.reserve(transitions.size());
        for (const auto& t : transitions) support.emplace_back((t.array() > 0.0).matrix());
        return support;
      }()) {}

Environment::Environment(std::vector<Matrix> transitions, std::vector<Mask> support)
    : transitions_(std::move(transitions)), support_(std::move(support)) {
  if (transitions_.empty()) fail("environment needs at least one action");
  if (support_.size() != transitions_.size()) fail("environment: one support mask per action");
  n_states_ = static_cast<int>(transitions_.front().rows());
  if (n_states_ <= 0) fail("environment needs at least one state");
  for (std::size_t k = 0; k < transitions_.size(); ++k) {
    const Matrix& t = transitions_[k];
    const Mask& s = support_[k];
    if (t.rows() != n_states_ || t.cols() != n_states_)
      fail("environment: transition matrix " + std::to_string(k) + " is not N x N");
    if (s.rows() != n_states_ || s.cols() != n_states_)
      fail("environment: support mask " + std::to_string(k) + " is not N x N");
    require_column_stochastic(t, "environment transition");
    if (((t.array() > 0.0) && !s.array()).any())
      fail("environment: transition " + std::to_string(k) + " has mass outside its support");
  }
}

bool Environment::is_deterministic() const {
  for (const auto& t : transitions_) {
    for (Eigen::Index i = 0; i < t.cols(); ++i) {
      if ((t.col(i).array() == 1.0).count() != 1) return false;
    }
  }
  return true;
}

Policy::Policy(Matrix probs) : probs_(std::move(probs)) {
  if (probs_.rows() <= 0 || probs_.cols() <= 0) fail("policy must be non-empty");
  require_column_stochastic(probs_, "policy");
}

Policy Policy::uniform(int n_actions, int n_states) {
  if (n_actions <= 0 || n_states <= 0) fail("policy must be non-empty");
  return Policy(Matrix::Constant(n_actions, n_states, 1.0 / n_actions));
}

StateDistribution::StateDistribution(Vector values) : values_(std::move(values)) {
  if (values_.size() == 0) fail("state distribution must be non-empty");
  require_column_stochastic(values_, "state distribution");
}

StateDistribution StateDistribution::one_hot(int n_states, int state) {
  if (state < 0 || state >= n_states) fail("one_hot: state out of range");
  Vector v = Vector::Zero(n_states);
  v[state] = 1.0;
  return StateDistribution(std::move(v));
}

RewardVector::RewardVector(Vector values) : values_(std::move(values)) {
  if (values_.size() == 0) fail("reward vector must be non-empty");
  if (!values_.allFinite()) fail("reward vector: non-finite entry");
}

RewardVector RewardVector::one_hot(int n_states, int state, double value) {
  if (state < 0 || state >= n_states) fail("one_hot: state out of range");
  Vector v = Vector::Zero(n_states);
  v[state] = value;
  return RewardVector(std::move(v));
}

ProjectionMatrix::ProjectionMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() == 0 || values_.rows() != values_.cols())
    fail("projection matrix must be square and non-empty");
  require_column_stochastic(values_, "projection matrix");
}

void DiscountConfig::validate() const {
  auto check = [](double g, const char* name) {
    if (!(g >= 0.0 && g < 1.0)) fail(std::string(name) + " must lie in [0, 1)");
  };
  check(gamma_z, "gamma_z");
  check(gamma_q, "gamma_q");
}

ProjectionMatrix build_projection(const Environment& env, const Policy& policy) {
  if (policy.n_actions() != env.n_actions() || policy.n_states() != env.n_states())
    fail("build_projection: policy shape does not match environment");
  return ProjectionMatrix(kernels::omp::projection(env.transitions(), policy.probs()));
}

Policy project_policy(const Matrix& raw) {
  if (raw.rows() == 0 || raw.cols() == 0) fail("project_policy: empty matrix");
  if (!raw.allFinite()) fail("project_policy: non-finite entry");
  Matrix p = raw.cwiseMax(0.0);
  for (Eigen::Index i = 0; i < p.cols(); ++i) {
    const double sum = p.col(i).sum();
    if (sum > 0.0) {
      p.col(i) /= sum;
    } else {
      p.col(i).setConstant(1.0 / static_cast<double>(p.rows()));
    }
  }
  return Policy(std::move(p));
}

}  // namespace grep
