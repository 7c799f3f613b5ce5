#include <gtest/gtest.h>

#include <cstring>

#include "hoil/config.hpp"
#include "hoil/density.hpp"
#include "hoil/rejection.hpp"
#include "oracles.hpp"

using namespace hoil;

TEST(OptimalDiscriminator, ClosedForm) {
  EXPECT_DOUBLE_EQ(optimal_discriminator(0.3, 0.1), oracle::optimal_d(0.3, 0.1));
  EXPECT_EQ(optimal_discriminator(0.0, 0.2), 0.0);
  EXPECT_EQ(optimal_discriminator(0.2, 0.0), 1.0);
  EXPECT_THROW(optimal_discriminator(0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(optimal_discriminator(-0.1, 0.2), std::invalid_argument);
}

TEST(ImportanceWeight, InvertsOptimalDiscriminator) {
  for (double r1 : {0.1, 0.4, 0.9}) {
    for (double re : {0.05, 0.3, 0.8}) {
      EXPECT_NEAR(importance_weight_from_output(optimal_discriminator(r1, re)), oracle::density_ratio(r1, re), 1e-12);
    }
  }
}

TEST(ImportanceWeight, ClippedIntoRangeForAnyOutput) {
  Rng rng(0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double a = importance_weight_from_output(u(rng));
    EXPECT_GE(a, kAlphaMin);
    EXPECT_LE(a, kAlphaMax);
  }
  EXPECT_EQ(importance_weight_from_output(0.0), kAlphaMax);
  EXPECT_EQ(importance_weight_from_output(1.0), kAlphaMin);
}

TEST(PseudoReward, NegativeLogAndMonotone) {
  EXPECT_NEAR(pseudo_reward_from_output(0.5), std::log(2.0), 1e-15);
  EXPECT_GT(pseudo_reward_from_output(0.1), pseudo_reward_from_output(0.9));
  EXPECT_TRUE(std::isfinite(pseudo_reward_from_output(0.0)));
}

TEST(MinMax, MapsOntoUnitInterval) {
  const auto v = minmax_normalize({3.0, 1.0, 2.0});
  EXPECT_EQ(v, (std::vector<double>{1.0, 0.0, 0.5}));
  EXPECT_EQ(minmax_normalize({2.0, 2.0}), (std::vector<double>{0.0, 0.0}));
  RunningMinMax run;
  run.normalize({0.0, 10.0});
  const auto w = run.normalize({5.0});
  EXPECT_DOUBLE_EQ(w[0], 0.5);
  EXPECT_EQ(run.min(), 0.0);
  EXPECT_EQ(run.max(), 10.0);
}

TEST(RoleBatch, WeightsReproduceTheTwoMeans) {
  const Eigen::MatrixXd pos = Eigen::MatrixXd::Random(4, 3);
  const Eigen::MatrixXd neg = Eigen::MatrixXd::Random(4, 5);
  Eigen::VectorXd alpha(5);
  alpha << 1, 2, 3, 4, 5;
  const auto b = role_batch(pos, neg, &alpha);
  EXPECT_NEAR(b.weights.head(3).sum(), 1.0, 1e-15);
  EXPECT_NEAR(b.weights.tail(5).sum(), 3.0, 1e-15);
  EXPECT_TRUE((b.targets.head(3).array() == kLearnerSide).all());
  EXPECT_TRUE((b.targets.tail(5).array() == kDemoSide).all());
  EXPECT_THROW(role_batch(pos, Eigen::MatrixXd(4, 0)), std::invalid_argument);
}

TEST(Mixture, IsConvexCombination) {
  MixtureSpec m{0.5, {0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}};
  const auto r = m.mixture();
  EXPECT_EQ(r, (std::vector<double>{0.25, 0.5, 0.25}));
}

TEST(Labels, IndicatorAndBinarize) {
  EXPECT_EQ(indicator(0.51), 1);
  EXPECT_EQ(indicator(0.5), -1);
  EXPECT_EQ(binarize(0.7), 1);
  EXPECT_EQ(binarize(0.5), 0);
}

TEST(Labels, CombinedLabelTable) {
  // Expert-like (D < 0.5) and rejected -> H; expert-like and accepted -> O; otherwise N.
  EXPECT_EQ(combined_label_from_outputs(0.1, 0.9), TernaryLabel::LatentDemo);
  EXPECT_EQ(combined_label_from_outputs(0.1, 0.1), TernaryLabel::ObservedDemo);
  EXPECT_EQ(combined_label_from_outputs(0.9, 0.9), TernaryLabel::NonExpert);
  EXPECT_EQ(combined_label_from_outputs(0.9, 0.1), TernaryLabel::NonExpert);
}

TEST(Labels, BalancedAccuracyAveragesRecall) {
  using L = TernaryLabel;
  const std::vector<L> truth{L::LatentDemo, L::ObservedDemo, L::ObservedDemo, L::NonExpert, L::NonExpert, L::NonExpert,
                             L::NonExpert};
  const std::vector<L> pred{L::LatentDemo, L::ObservedDemo, L::NonExpert, L::NonExpert, L::NonExpert, L::NonExpert,
                            L::LatentDemo};
  EXPECT_NEAR(balanced_accuracy(pred, truth), (1.0 + 0.5 + 0.75) / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(balanced_accuracy(truth, truth), 1.0);
}

namespace {

struct RejectionFixture {
  Discriminator d;
  RejectionHead g;
  Eigen::MatrixXd x;
  Eigen::VectorXd targets;
  Eigen::VectorXd weights;
};

RejectionFixture random_rejection(std::uint64_t seed) {
  Rng rng(seed);
  RejectionFixture f{PairModel::create(Space::Learner, 2, 3, {4}, rng), PairModel::create(Space::Learner, 2, 3, {4}, rng),
                     Eigen::MatrixXd::Zero(5, 10), Eigen::VectorXd(10), Eigen::VectorXd(10)};
  std::normal_distribution<double> n;
  for (int i = 0; i < 10; ++i) {
    f.x(0, i) = n(rng);
    f.x(1, i) = n(rng);
    f.x(2 + i % 3, i) = 1.0;
    f.targets[i] = i % 2;
    f.weights[i] = 0.1 * (i + 1);
  }
  return f;
}

}  // namespace

TEST(Rejection, HingeIsExactlyZeroAtOrAboveTarget) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto f = random_rejection(seed);
    RejectionConfig rc;
    rc.penalty_weight = 3.0;
    const double cov = empirical_coverage(f.g, f.x);
    for (double c : {cov, cov * 0.9, cov * 0.5}) {
      rc.target_coverage = c;
      const auto r = rejection_loss(f.d, f.g, f.x, f.targets, f.weights, rc);
      EXPECT_EQ(r.penalty, 0.0);
      EXPECT_EQ(std::memcmp(&r.total, &r.selective_risk, sizeof(double)), 0);
    }
    rc.target_coverage = std::min(1.0, cov + 0.05);
    EXPECT_GT(rejection_loss(f.d, f.g, f.x, f.targets, f.weights, rc).penalty, 0.0);
  }
}

TEST(Rejection, SelectiveRiskWeightsLossesByAcceptance) {
  auto f = random_rejection(9);
  const Eigen::VectorXd gout = f.g.outputs(f.x);
  const Eigen::VectorXd dout = f.d.outputs(f.x);
  double num = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double p = clamp_prob(dout[i]);
    const double bce = -(f.targets[i] * std::log(p) + (1 - f.targets[i]) * std::log(1 - p));
    num += f.weights[i] * bce * gout[i];
  }
  EXPECT_NEAR(selective_risk(f.d, f.g, f.x, f.targets, f.weights), num / gout.sum(), 1e-12);
}

TEST(Rejection, CollapsedCoverageIsReported) {
  auto f = random_rejection(1);
  f.g.net().params().setZero();
  f.g.net().params().tail(1)[0] = -1000.0;  // output bias drives g to 0
  EXPECT_THROW(rejection_loss(f.d, f.g, f.x, f.targets, f.weights, RejectionConfig{}), CollapsedCoverage);
}

TEST(Rejection, ConfigValidation) {
  EXPECT_THROW((RejectionConfig{0.0, 1.0}).validate(), std::invalid_argument);
  EXPECT_THROW((RejectionConfig{0.8, -1.0}).validate(), std::invalid_argument);
  EXPECT_NO_THROW((RejectionConfig{1.0, 0.0}).validate());
}

TEST(Rejection, JointTrainingSeparatesRoles) {
  Rng rng(3);
  auto d = PairModel::create(Space::Expert, 2, 2, {8}, rng);
  auto g = PairModel::create(Space::Expert, 2, 2, {8}, rng);
  Eigen::MatrixXd pos = Eigen::MatrixXd::Zero(4, 200), neg = Eigen::MatrixXd::Zero(4, 200);
  for (int i = 0; i < 200; ++i) {
    pos(0, i) = 1.0;
    pos(2, i) = 1.0;
    neg(1, i) = 1.0;
    neg(3, i) = 1.0;
  }
  JointTrainConfig cfg;
  cfg.steps = 500;
  cfg.adam.learning_rate = 1e-2;
  cfg.adam.total_steps = 500;
  train_joint(d, g, pos, neg, cfg, rng);
  EXPECT_GT(d.outputs(pos.leftCols(1))[0], 0.9);
  EXPECT_LT(d.outputs(neg.leftCols(1))[0], 0.1);
}
