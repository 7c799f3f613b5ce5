#include <gtest/gtest.h>

#include "hoil/approx.hpp"

using namespace hoil;

TEST(Approximator, ShapesAndParameterCount) {
  Approximator f({3, 5, 2}, Head::Linear);
  EXPECT_EQ(f.parameter_count(), 3 * 5 + 5 + 5 * 2 + 2);
  EXPECT_EQ(f.input_dim(), 3);
  EXPECT_EQ(f.output_dim(), 2);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 7);
  EXPECT_EQ(f.forward(x).rows(), 2);
  EXPECT_EQ(f.forward(x).cols(), 7);
}

TEST(Approximator, OrthogonalRowsOrColumns) {
  Rng rng(1);
  const auto f = Approximator::orthogonal({4, 6}, Head::Linear, rng);
  Eigen::Map<const Eigen::MatrixXd> w(f.params().data(), 6, 4);
  const Eigen::MatrixXd gram = w.transpose() * w;
  EXPECT_TRUE(gram.isApprox(Eigen::MatrixXd::Identity(4, 4), 1e-10));
  EXPECT_TRUE(f.params().tail(6).isZero());
}

TEST(Approximator, HeadsProduceValidOutputs) {
  Rng rng(2);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 9) * 5.0;
  const auto s = Approximator::orthogonal({3, 4, 1}, Head::Sigmoid, rng).forward(x);
  EXPECT_TRUE((s.array() > 0.0).all() && (s.array() < 1.0).all());
  const auto p = Approximator::orthogonal({3, 4, 5}, Head::Softmax, rng).forward(x);
  for (int j = 0; j < 9; ++j) EXPECT_NEAR(p.col(j).sum(), 1.0, 1e-12);
}

TEST(Approximator, HeadNamesRoundTrip) {
  for (Head h : {Head::Sigmoid, Head::Softmax, Head::Linear}) EXPECT_EQ(parse_head(head_name(h)), h);
  EXPECT_THROW(parse_head("relu"), std::invalid_argument);
}

TEST(Gradients, MeanSquaredMatchesCentralDifferences) {
  Rng rng(3);
  const auto f = Approximator::orthogonal({2, 6, 5, 3}, Head::Linear, rng);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, 6);
  const Eigen::MatrixXd y = Eigen::MatrixXd::Random(3, 6);
  EXPECT_LT(finite_diff_check(f, losses::mean_squared(y), x), 1e-6);
}

TEST(Gradients, BinaryCrossEntropyMatchesCentralDifferences) {
  Rng rng(4);
  const auto f = Approximator::orthogonal({3, 5, 1}, Head::Sigmoid, rng);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 8);
  Eigen::VectorXd t(8), w(8);
  for (int i = 0; i < 8; ++i) {
    t[i] = i % 2;
    w[i] = 0.5 + 0.1 * i;
  }
  EXPECT_LT(finite_diff_check(f, losses::binary_cross_entropy(t, w), x), 1e-6);
}

TEST(Gradients, CheckerDetectsAWrongGradient) {
  Rng rng(5);
  const auto f = Approximator::orthogonal({2, 3, 1}, Head::Linear, rng);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, 4);
  const LossFn good = losses::mean_squared(Eigen::MatrixXd::Zero(1, 4));
  const LossFn bad = [good](const Eigen::MatrixXd& raw) {
    LossResult r = good(raw);
    r.d_raw *= 1.5;
    return r;
  };
  EXPECT_GT(finite_diff_check(f, bad, x), 0.1);
}

TEST(Gradients, NonFiniteLossNamesTheColumn) {
  Approximator f({1, 1}, Head::Linear);
  Eigen::MatrixXd x(1, 3);
  x << 1.0, std::numeric_limits<double>::quiet_NaN(), 2.0;
  f.params().setOnes();
  try {
    grad(f, losses::mean_squared(Eigen::MatrixXd::Zero(1, 3)), x);
    FAIL() << "expected NonFiniteLoss";
  } catch (const NonFiniteLoss& e) {
    EXPECT_EQ(e.batch_index(), 1);
  }
}

TEST(ClampedBce, StraightThroughAtSaturation) {
  const BceTerm t = bce_term(100.0, 0.0);
  EXPECT_NEAR(t.loss, -std::log(kProbClamp), 1e-9);
  EXPECT_TRUE(std::isfinite(t.d_logit));
  EXPECT_EQ(clamp_prob(0.0), kProbClamp);
  EXPECT_EQ(clamp_prob(1.0), 1.0 - kProbClamp);
}

TEST(Adam, MinimizesAQuadratic) {
  Approximator f({1, 1}, Head::Linear);
  f.params() << 3.0, -2.0;
  AdamConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.total_steps = 2000;
  cfg.linear_decay = false;
  Adam opt(f.parameter_count(), cfg);
  for (int i = 0; i < 2000; ++i) opt.step(f, 2.0 * f.params());
  EXPECT_LT(f.params().norm(), 1e-2);
}

TEST(Adam, LinearDecayReachesZeroThenRefuses) {
  Approximator f({1, 1}, Head::Linear);
  AdamConfig cfg;
  cfg.total_steps = 4;
  Adam opt(f.parameter_count(), cfg);
  EXPECT_DOUBLE_EQ(opt.current_lr(), cfg.learning_rate);
  for (int i = 0; i < 4; ++i) opt.step(f, Eigen::VectorXd::Ones(2));
  EXPECT_EQ(opt.current_lr(), 0.0);
  EXPECT_THROW(opt.step(f, Eigen::VectorXd::Ones(2)), std::exception);
}

TEST(ParameterHash, SensitiveToEveryParameter) {
  Approximator f({2, 2}, Head::Linear);
  const auto h0 = parameter_hash(f);
  for (Eigen::Index i = 0; i < f.parameter_count(); ++i) {
    Approximator g = f;
    g.params()[i] = 1e-300;
    EXPECT_NE(parameter_hash(g), h0);
  }
}
