#include <gtest/gtest.h>

#include "hoil/config.hpp"
#include "hoil/iwre.hpp"

using namespace hoil;

TEST(QueryBudget, FromRatioFloorsAndUnlimited) {
  EXPECT_EQ(QueryBudget::from_ratio(0.05, 40000).max_queries(), 2000);
  EXPECT_EQ(QueryBudget::from_ratio(0.0, 40000).max_queries(), 0);
  EXPECT_EQ(QueryBudget::from_ratio(0.3, 7).max_queries(), 2);
  EXPECT_TRUE(QueryBudget::from_ratio(std::numeric_limits<double>::infinity(), 10).unlimited());
  EXPECT_THROW(QueryBudget::from_ratio(1.5, 10), std::invalid_argument);
  EXPECT_THROW(QueryBudget::from_ratio(-0.1, 10), std::invalid_argument);
}

TEST(QueryBudget, ConsumeNeverExceedsCap) {
  QueryBudget b(3);
  for (int i = 0; i < 3; ++i) b.consume();
  EXPECT_TRUE(b.exhausted());
  EXPECT_EQ(b.remaining(), 0);
  EXPECT_THROW(b.consume(), std::logic_error);
  EXPECT_EQ(b.used(), 3);
  QueryBudget zero(0);
  EXPECT_TRUE(zero.exhausted());
  EXPECT_THROW(zero.consume(), std::logic_error);
}

TEST(QueryGate, RequiresPi2SideAndRejection) {
  EXPECT_TRUE(query_gate(0.9, 0.9));
  EXPECT_FALSE(query_gate(0.1, 0.9));
  EXPECT_FALSE(query_gate(0.9, 0.1));
  EXPECT_FALSE(query_gate(0.5, 0.9));
}

TEST(QueryGate, ExhaustedBudgetBlocksQueries) {
  Rng rng(0);
  auto d = PairModel::create(Space::Learner, 1, 2, {2}, rng);
  auto g = PairModel::create(Space::Learner, 1, 2, {2}, rng);
  d.net().params().setZero();
  g.net().params().setZero();
  d.net().params().tail(1)[0] = 5.0;
  g.net().params().tail(1)[0] = 5.0;
  const Instance x{{0.3}, 1, Space::Learner, 0, 0};
  EXPECT_TRUE(should_query(d, g, x, QueryBudget(1)));
  EXPECT_FALSE(should_query(d, g, x, QueryBudget(0)));
}

TEST(OcQuery, ReturnsExpertViewAndConsumes) {
  const auto env = build_env(corridor_config().env, 0);
  QueryBudget b(1);
  const int s = env.cell_to_state({2, 0});
  const Instance x{env.observe(Space::Learner, s), 2, Space::Learner, s, 3};
  const Instance e = oc_query(env, x, b);
  EXPECT_EQ(e.space, Space::Expert);
  EXPECT_EQ(e.obs, env.observe(Space::Expert, s));
  EXPECT_EQ(e.action, 2);
  EXPECT_EQ(b.used(), 1);
  EXPECT_THROW(oc_query(env, x, b), std::logic_error);
}

TEST(ReplayBuffer, FifoWithCapacity) {
  ReplayBuffer buf(2);
  for (int i = 0; i < 3; ++i) buf.push({Instance{{double(i)}, 0}, TernaryLabel::NonExpert});
  EXPECT_TRUE(buf.full());
  EXPECT_EQ(buf.size(), 2u);
  EXPECT_EQ(buf.records().front().x_l.obs[0], 1.0);
}

TEST(Calibration, TeacherTargets) {
  const auto h = calibration_targets(TernaryLabel::LatentDemo);
  const auto o = calibration_targets(TernaryLabel::ObservedDemo);
  const auto n = calibration_targets(TernaryLabel::NonExpert);
  EXPECT_EQ(h.d_target, kDemoSide);
  EXPECT_EQ(h.g_target, 1.0);
  EXPECT_EQ(o.d_target, kDemoSide);
  EXPECT_EQ(o.g_target, 0.0);
  EXPECT_EQ(n.d_target, kLearnerSide);
  EXPECT_EQ(n.g_target, 1.0);
}

TEST(PolicyBatch, ReturnsAreDiscountedPerEpisode) {
  Rng rng(1);
  const auto pi = NeuralPolicy::create(1, 2, Space::Learner, {4}, rng);
  std::vector<DualInstance> steps;
  for (int t : {0, 1, 2, 0, 1}) {
    DualInstance d;
    d.obs_l = {double(t)};
    d.t = t;
    steps.push_back(d);
  }
  const std::vector<double> r{1, 2, 3, 4, 5};
  const auto b = prepare_policy_batch(pi, steps, r, 0.5);
  EXPECT_DOUBLE_EQ(b.returns[0], 1 + 0.5 * 2 + 0.25 * 3);
  EXPECT_DOUBLE_EQ(b.returns[2], 3.0);
  EXPECT_DOUBLE_EQ(b.returns[3], 4 + 0.5 * 5);
  EXPECT_DOUBLE_EQ(b.returns[4], 5.0);
  for (int i = 0; i < 5; ++i) {
    const double v = pi.value(std::vector<double>{double(steps[i].t)});
    EXPECT_NEAR(b.advantages[i], b.returns[i] - v, 1e-12);
  }
}

TEST(PolicyBatch, SliceSelectsColumns) {
  PolicyBatch b;
  b.obs = Eigen::MatrixXd::Random(2, 4);
  b.actions = {0, 1, 2, 3};
  b.old_log_prob = Eigen::VectorXd::LinSpaced(4, 0, 3);
  b.returns = b.old_log_prob * 2;
  b.advantages = b.old_log_prob * 3;
  const auto s = slice(b, {3, 1});
  EXPECT_EQ(s.actions, (std::vector<int>{3, 1}));
  EXPECT_EQ(s.obs.col(0), b.obs.col(3));
  EXPECT_EQ(s.returns[1], 2.0);
  EXPECT_EQ(s.advantages[0], 9.0);
}

TEST(Ppo, ClippedSurrogateStopsGradientOutsideRange) {
  PolicyBatch b;
  b.obs = Eigen::MatrixXd::Zero(1, 1);
  b.actions = {0};
  b.returns = Eigen::VectorXd::Zero(1);
  b.advantages = Eigen::VectorXd::Ones(1);
  b.old_log_prob = Eigen::VectorXd::Constant(1, std::log(0.1));  // ratio 5 > 1 + clip
  PpoConfig cfg;
  cfg.entropy_coef = 0.0;
  cfg.value_coef = 0.0;
  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(3, 1);  // two equal logits -> p = 0.5
  const auto r = ppo_loss(b, 2, cfg)(raw);
  EXPECT_NEAR(r.value, -1.2, 1e-12);
  EXPECT_TRUE(r.d_raw.isZero());
}

TEST(BehaviorClone, FitsASeparableLabeling) {
  Rng rng(2);
  auto pi = NeuralPolicy::create(1, 2, Space::Learner, {8}, rng);
  Eigen::MatrixXd obs(1, 40);
  std::vector<int> actions;
  for (int i = 0; i < 40; ++i) {
    obs(0, i) = i < 20 ? -1.0 : 1.0;
    actions.push_back(i < 20 ? 0 : 1);
  }
  behavior_clone(pi, obs, actions, 300, 16, 1e-2, rng);
  EXPECT_EQ(pi.greedy_action(std::vector<double>{-1.0}), 0);
  EXPECT_EQ(pi.greedy_action(std::vector<double>{1.0}), 1);
}

TEST(IwreConfig, ValidationRejectsNonsense) {
  IwreConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = IwreConfig{};
  cfg.discriminator_passes = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = IwreConfig{};
  cfg.rejection.target_coverage = 1.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Evaluate, VisitFractionOfEmptyClassIsNan) {
  SupportPartition p{1, 2, {TernaryLabel::NonExpert, TernaryLabel::NonExpert}};
  EXPECT_TRUE(std::isnan(visit_fraction({true, false}, p, TernaryLabel::LatentDemo)));
  EXPECT_DOUBLE_EQ(visit_fraction({true, false}, p, TernaryLabel::NonExpert), 0.5);
}
