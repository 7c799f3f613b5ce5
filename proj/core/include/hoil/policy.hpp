#pragma once

#include <map>
#include <memory>
#include <span>
#include <vector>

#include "hoil/approx.hpp"
#include "hoil/env.hpp"

namespace hoil {

/// Categorical policy over an observation space.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual Space space() const = 0;
  virtual int action_count() const = 0;
  virtual std::vector<double> probabilities(std::span<const double> obs) const = 0;

  int greedy_action(std::span<const double> obs) const;
  int sample_action(std::span<const double> obs, Rng& rng) const;
};

/// Per-state action table looked up through one encoder. Only environment-side
/// constructions (expert, auxiliary, uniform) build these.
class TabularPolicy final : public Policy {
 public:
  TabularPolicy(Space space, std::vector<std::vector<double>> table,
                const std::vector<std::vector<double>>& encoder_rows);

  Space space() const override { return space_; }
  int action_count() const override { return static_cast<int>(table_.front().size()); }
  std::vector<double> probabilities(std::span<const double> obs) const override;
  const std::vector<double>& state_probabilities(int state) const { return table_.at(state); }
  const std::vector<std::vector<double>>& table() const { return table_; }

 private:
  Space space_;
  std::vector<std::vector<double>> table_;
  std::map<std::vector<double>, int> lookup_;
};

/// Greedy policy of value iteration on true rewards, reading O_E.
TabularPolicy expert_policy(const DualObsEnv& env);

/// Expert of the environment with the blocked region impassable, mixed with a
/// uniform choice over admissible actions with probability epsilon.
TabularPolicy auxiliary_policy(const DualObsEnv& env, double epsilon);

TabularPolicy uniform_policy(const DualObsEnv& env, Space space);

/// Softmax policy whose approximator also carries a value head: the linear
/// output has action_count logits followed by one state-value estimate.
class NeuralPolicy final : public Policy {
 public:
  NeuralPolicy(Approximator net, Space space, int action_count);

  static NeuralPolicy create(int obs_dim, int action_count, Space space, const std::vector<int>& hidden, Rng& rng);

  Space space() const override { return space_; }
  int action_count() const override { return actions_; }
  std::vector<double> probabilities(std::span<const double> obs) const override;
  double value(std::span<const double> obs) const;

  Approximator& net() { return net_; }
  const Approximator& net() const { return net_; }

 private:
  Approximator net_;
  Space space_;
  int actions_;
};

/// Column-stacked observations.
Eigen::MatrixXd stack_columns(const std::vector<std::vector<double>>& rows);

/// Observation followed by a one-hot action, the discriminator input layout.
Eigen::VectorXd obs_action_features(std::span<const double> obs, int action, int action_count);

}  // namespace hoil
