#pragma once

#include <stdexcept>
#include <vector>

#include "hoil/density.hpp"

namespace hoil {

using RejectionHead = PairModel;

inline constexpr double kRejectionThreshold = 0.5;

struct RejectionConfig {
  double target_coverage = 0.8;  // c
  double penalty_weight = 1.0;   // lambda
  void validate() const;
};

/// Raised when the relaxed coverage of a batch is numerically zero.
class CollapsedCoverage : public std::runtime_error {
 public:
  explicit CollapsedCoverage(double coverage);
  double coverage() const { return coverage_; }

 private:
  double coverage_;
};

inline constexpr double kMinCoverage = 1e-8;

/// Mean relaxed output of g over the batch columns.
double empirical_coverage(const RejectionHead& g, const Eigen::MatrixXd& features);
double empirical_coverage(const Eigen::VectorXd& g_outputs);

/// sum_i l_i g_i / sum_i g_i where l_i = w_i * BCE(D(x_i), y_i).
double selective_risk(const Discriminator& d, const RejectionHead& g, const Eigen::MatrixXd& features,
                      const Eigen::VectorXd& targets, const Eigen::VectorXd& weights);

struct RejectionLossResult {
  double selective_risk = 0.0;
  double coverage = 0.0;
  double penalty = 0.0;  // lambda * max(0, c - coverage)^2, exactly 0.0 once coverage >= c
  double total = 0.0;    // selective_risk + penalty
  Eigen::VectorXd grad_d;
  Eigen::VectorXd grad_g;
};

RejectionLossResult rejection_loss(const Discriminator& d, const RejectionHead& g, const Eigen::MatrixXd& features,
                                   const Eigen::VectorXd& targets, const Eigen::VectorXd& weights,
                                   const RejectionConfig& cfg);

/// +1 iff v > 0.5, else -1.
int indicator(double v);
int binarize(double g_output);

/// Ternary label from a discriminator output and a relaxed rejection output.
/// The indicator is applied to the expert-likeness 1 - D, so that +1 means
/// "looks like demonstration data" under the role convention in density.hpp.
TernaryLabel combined_label_from_outputs(double d_output, double g_output);
TernaryLabel combined_label(const Discriminator& d, const RejectionHead& g, const Instance& x);

/// Labels for every (state, action) pair of a tabular environment, indexed s * A + a.
std::vector<TernaryLabel> label_all_pairs(const Discriminator& d, const RejectionHead& g, const DualObsEnv& env);

/// Mean per-class recall over the classes present in `truth`.
double balanced_accuracy(const std::vector<TernaryLabel>& predicted, const std::vector<TernaryLabel>& truth);

struct JointTrainConfig {
  RejectionConfig rejection;
  int steps = 2000;
  int batch_per_side = 128;
  AdamConfig adam;
};

struct JointTrainStats {
  double last_gail_loss = 0.0;
  double last_rejection_loss = 0.0;
  double last_coverage = 0.0;
};

/// Alternating updates of a (D, g) pair on role-labelled data: D descends the
/// plain adversarial loss (positives = learner/auxiliary side, negatives =
/// demonstration side), and g descends the rejection loss with D held fixed.
JointTrainStats train_joint(Discriminator& d, RejectionHead& g, const Eigen::MatrixXd& positives,
                            const Eigen::MatrixXd& negatives, const JointTrainConfig& cfg, Rng& rng);

/// Column subset with replacement.
Eigen::MatrixXd sample_columns(const Eigen::MatrixXd& m, int n, Rng& rng);

}  // namespace hoil
