#include "hoil/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hoil {

int Policy::greedy_action(std::span<const double> obs) const {
  const auto p = probabilities(obs);
  return argmax_lowest(p, 0.0);
}

int Policy::sample_action(std::span<const double> obs, Rng& rng) const {
  const auto p = probabilities(obs);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double acc = 0.0;
  int last = 0;
  for (int a = 0; a < static_cast<int>(p.size()); ++a) {
    if (p[a] <= 0.0) continue;
    acc += p[a];
    last = a;
    if (u < acc) return a;
  }
  return last;
}

TabularPolicy::TabularPolicy(Space space, std::vector<std::vector<double>> table,
                             const std::vector<std::vector<double>>& encoder_rows)
    : space_(space), table_(std::move(table)) {
  if (table_.empty() || table_.size() != encoder_rows.size()) {
    throw std::invalid_argument("tabular policy needs one row per encoded state");
  }
  for (int s = 0; s < static_cast<int>(table_.size()); ++s) {
    double total = 0.0;
    for (double p : table_[s]) {
      if (p < 0.0) throw std::invalid_argument("negative action probability");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("action probabilities must sum to 1");
    lookup_.emplace(encoder_rows[s], s);
  }
}

std::vector<double> TabularPolicy::probabilities(std::span<const double> obs) const {
  auto it = lookup_.find(std::vector<double>(obs.begin(), obs.end()));
  if (it == lookup_.end()) throw std::out_of_range("observation not produced by this policy's encoder");
  return table_[it->second];
}

namespace {

const std::vector<std::vector<double>>& encoder_rows(const DualObsEnv& env, Space space) {
  return space == Space::Expert ? env.definition().encoder_e : env.definition().encoder_l;
}

std::vector<std::vector<double>> greedy_table(const DualObsEnv& env, const ValueIterationResult& vi) {
  std::vector<std::vector<double>> table(env.state_count(), std::vector<double>(env.action_count(), 0.0));
  for (int s = 0; s < env.state_count(); ++s) table[s][argmax_lowest(vi.q[s])] = 1.0;
  return table;
}

}  // namespace

TabularPolicy expert_policy(const DualObsEnv& env) {
  const auto vi = value_iteration(env);
  return TabularPolicy(Space::Expert, greedy_table(env, vi), encoder_rows(env, Space::Expert));
}

TabularPolicy auxiliary_policy(const DualObsEnv& env, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0,1]");
  if (!env.has_blocked_region()) throw std::invalid_argument("auxiliary policy needs a blocked region");
  // The goal must be reachable once the region is removed; a zero value at
  // the start means no reward is attainable.
  const auto vi = value_iteration(env, env.blocked());
  double start_value = 0.0;
  for (int s = 0; s < env.state_count(); ++s) start_value += env.start_distribution()[s] * vi.values[s];
  const auto unrestricted = value_iteration(env);
  double best_value = 0.0;
  for (int s = 0; s < env.state_count(); ++s) best_value += env.start_distribution()[s] * unrestricted.values[s];
  if (std::abs(start_value) < 1e-12 && std::abs(best_value) > 1e-12) {
    throw std::invalid_argument("goal unreachable with the blocked region impassable");
  }
  auto table = greedy_table(env, vi);
  for (int s = 0; s < env.state_count(); ++s) {
    const auto allowed = admissible_actions(env, s);
    for (double& p : table[s]) p *= (1.0 - epsilon);
    for (int a : allowed) table[s][a] += epsilon / static_cast<double>(allowed.size());
  }
  return TabularPolicy(Space::Expert, std::move(table), encoder_rows(env, Space::Expert));
}

TabularPolicy uniform_policy(const DualObsEnv& env, Space space) {
  std::vector<std::vector<double>> table(env.state_count(),
                                         std::vector<double>(env.action_count(), 1.0 / env.action_count()));
  return TabularPolicy(space, std::move(table), encoder_rows(env, space));
}

NeuralPolicy::NeuralPolicy(Approximator net, Space space, int action_count)
    : net_(std::move(net)), space_(space), actions_(action_count) {
  if (net_.head() != Head::Linear || net_.output_dim() != action_count + 1) {
    throw std::invalid_argument("policy network needs a linear head with action_count + 1 outputs");
  }
}

NeuralPolicy NeuralPolicy::create(int obs_dim, int action_count, Space space, const std::vector<int>& hidden,
                                  Rng& rng) {
  std::vector<int> sizes{obs_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(action_count + 1);
  return NeuralPolicy(Approximator::orthogonal(sizes, Head::Linear, rng), space, action_count);
}

std::vector<double> NeuralPolicy::probabilities(std::span<const double> obs) const {
  const Eigen::VectorXd out = net_.forward(obs);
  const Eigen::MatrixXd probs = apply_head(Head::Softmax, out.head(actions_));
  return {probs.data(), probs.data() + actions_};
}

double NeuralPolicy::value(std::span<const double> obs) const { return net_.forward(obs)[actions_]; }

Eigen::MatrixXd stack_columns(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.front().size()), static_cast<Eigen::Index>(rows.size()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    m.col(j) = Eigen::Map<const Eigen::VectorXd>(rows[j].data(), m.rows());
  }
  return m;
}

Eigen::VectorXd obs_action_features(std::span<const double> obs, int action, int action_count) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(obs.size()) + action_count);
  for (std::size_t i = 0; i < obs.size(); ++i) x[static_cast<Eigen::Index>(i)] = obs[i];
  x[static_cast<Eigen::Index>(obs.size()) + action] = 1.0;
  return x;
}

}  // namespace hoil
