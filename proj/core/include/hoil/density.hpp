#pragma once

#include <limits>
#include <vector>

#include "hoil/approx.hpp"
#include "hoil/data.hpp"

namespace hoil {

/// Sigmoid-scalar model over (observation, one-hot action). Used both as a
/// discriminator D and as a rejection head g.
class PairModel {
 public:
  PairModel() = default;
  PairModel(Approximator net, Space space, int obs_dim, int action_count);

  static PairModel create(Space space, int obs_dim, int action_count, const std::vector<int>& hidden, Rng& rng);

  Space space() const { return space_; }
  int obs_dim() const { return obs_dim_; }
  int action_count() const { return actions_; }
  Approximator& net() { return net_; }
  const Approximator& net() const { return net_; }

  /// Relaxed output in (0,1), unclamped.
  double operator()(std::span<const double> obs, int action) const;
  double operator()(const Instance& x) const;

  /// One feature column per instance.
  Eigen::MatrixXd features(const std::vector<Instance>& batch) const;
  Eigen::VectorXd outputs(const Eigen::MatrixXd& features) const;

 private:
  Approximator net_;
  Space space_ = Space::Expert;
  int obs_dim_ = 0;
  int actions_ = 0;
};

using Discriminator = PairModel;

inline constexpr double kAlphaMin = 1e-2;
inline constexpr double kAlphaMax = 1e2;

/// Role labels under the discriminator convention used throughout: target 1 is
/// the learner/auxiliary side (pi_1 data for D_w1, pi_2 data for D_w2), target
/// 0 is the demonstration side (expert data for D_w1, alpha-weighted pi_1 data
/// for D_w2). An instance looks expert-like when D < 0.5.
inline constexpr double kLearnerSide = 1.0;
inline constexpr double kDemoSide = 0.0;

/// Loss value and gradient with respect to one model's parameters.
struct ModelGrad {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

/// value = sum_i w_i * BCE(D(x_i), y_i); clamped probabilities, straight-through gradient.
LossFn weighted_bce_sum(Eigen::VectorXd targets, Eigen::VectorXd weights);

/// -[mean log D(positives) + mean log(1 - D(negatives))].
ModelGrad gail_loss(const Discriminator& d, const Eigen::MatrixXd& positives, const Eigen::MatrixXd& negatives);

/// Eq. (9) style loss: positives are pi_2 instances under O_L; negatives are
/// the O_L halves of pi_1 instances weighted by alpha (treated as constants).
ModelGrad weighted_d2_loss(const Discriminator& d2, const Eigen::MatrixXd& positives_pi2,
                           const Eigen::MatrixXd& negatives_pi1, const Eigen::VectorXd& alpha);

/// Batch layout shared by the two losses above: positives first, then
/// negatives, with per-sample targets and weights.
struct RoleBatch {
  Eigen::MatrixXd features;
  Eigen::VectorXd targets;
  Eigen::VectorXd weights;  // sum over the batch reproduces the two means
};
RoleBatch role_batch(const Eigen::MatrixXd& positives, const Eigen::MatrixXd& negatives,
                     const Eigen::VectorXd* negative_alpha = nullptr);

/// rho_1 / (rho_1 + rho_E).
double optimal_discriminator(double rho_1, double rho_e);

/// clip((1 - D) / D, kAlphaMin, kAlphaMax) with D clamped to [1e-6, 1 - 1e-6].
double importance_weight_from_output(double d);
double importance_weight(const Discriminator& d1, const Instance& x_e);
Eigen::VectorXd importance_weights(const Discriminator& d1, const Eigen::MatrixXd& features_e);

/// -log D (clamped).
double pseudo_reward_from_output(double d);
double pseudo_reward(const Discriminator& d2, const Instance& x_l);

/// Min-max map of one batch onto [0,1]; a constant batch maps to zeros.
std::vector<double> minmax_normalize(const std::vector<double>& raw);

/// Min-max normalization against the extremes seen so far.
class RunningMinMax {
 public:
  std::vector<double> normalize(const std::vector<double>& raw);
  double min() const { return lo_; }
  double max() const { return hi_; }

 private:
  double lo_ = std::numeric_limits<double>::infinity();
  double hi_ = -std::numeric_limits<double>::infinity();
};

/// Fixture description for density-ratio tests: rho_1 = delta rho_E + (1 - delta) rho_NE.
struct MixtureSpec {
  double delta = 0.5;
  std::vector<double> expert;      // component probabilities over a finite support
  std::vector<double> non_expert;
  std::vector<double> mixture() const;
};

}  // namespace hoil
