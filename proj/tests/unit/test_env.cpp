#include <gtest/gtest.h>

#include <set>

#include "hoil/config.hpp"
#include "hoil/env.hpp"
#include "hoil/policy.hpp"
#include "oracles.hpp"

using namespace hoil;

namespace {

DualObsEnv corridor(std::uint64_t seed = 0) { return build_env(corridor_config().env, seed); }

}  // namespace

TEST(Grid, EncodersAreInjectiveAndDecode) {
  const auto env = corridor(3);
  for (Space sp : {Space::Expert, Space::Learner}) {
    std::set<std::vector<double>> seen;
    for (int s = 0; s < env.state_count(); ++s) {
      const auto& o = env.observe(sp, s);
      EXPECT_EQ(static_cast<int>(o.size()), env.obs_dim(sp));
      EXPECT_TRUE(seen.insert(o).second);
      ASSERT_TRUE(env.decode(sp, o).has_value());
      EXPECT_EQ(*env.decode(sp, o), s);
    }
  }
}

TEST(Grid, ExpertEncoderIsPermutedOneHot) {
  const auto env = corridor(5);
  std::set<int> hot;
  for (int s = 0; s < env.state_count(); ++s) {
    const auto& o = env.observe(Space::Expert, s);
    int ones = 0;
    for (std::size_t k = 0; k < o.size(); ++k) {
      if (o[k] == 1.0) {
        ++ones;
        hot.insert(static_cast<int>(k));
      } else {
        EXPECT_EQ(o[k], 0.0);
      }
    }
    EXPECT_EQ(ones, 1);
  }
  EXPECT_EQ(static_cast<int>(hot.size()), env.state_count());
}

TEST(Grid, DifferentSeedsGiveDifferentEncoders) {
  const auto a = corridor(1);
  const auto b = corridor(2);
  bool differs = false;
  for (int s = 0; s < a.state_count(); ++s) differs = differs || a.observe(Space::Learner, s) != b.observe(Space::Learner, s);
  EXPECT_TRUE(differs);
}

TEST(Grid, StepMovesAndRewardsGoalEntry) {
  const auto env = corridor();
  Rng rng(0);
  const int s = env.cell_to_state({1, 0});
  const auto r = env.step(s, kUp, rng);
  EXPECT_EQ(r.next_state, env.cell_to_state({0, 0}));
  EXPECT_TRUE(r.done);
  EXPECT_EQ(r.reward, 1.0);
  const auto wall = env.step(env.cell_to_state({4, 0}), kDown, rng);
  EXPECT_EQ(wall.next_state, env.cell_to_state({4, 0}));
  EXPECT_EQ(wall.reward, 0.0);
}

TEST(Grid, RejectsBadArguments) {
  EXPECT_THROW(make_dual_grid(0, 5, {0, 0}, {}, 0), std::invalid_argument);
  EXPECT_THROW(make_dual_grid(5, 5, {9, 9}, {}, 0), std::invalid_argument);
  const auto env = corridor();
  Rng rng(0);
  EXPECT_THROW(env.step(-1, 0, rng), std::out_of_range);
  EXPECT_THROW(env.step(0, 7, rng), std::out_of_range);
}

TEST(ValueIteration, MatchesBfsOracle) {
  for (std::uint64_t seed : {0, 1}) {
    const auto env = corridor(seed);
    const auto vi = value_iteration(env);
    const auto ref = oracle::grid_values(env);
    for (int s = 0; s < env.state_count(); ++s) EXPECT_NEAR(vi.values[s], ref[s], 1e-9) << "state " << s;
  }
}

TEST(ValueIteration, ImpassableRegionMatchesBfsOracle) {
  const auto env = corridor();
  const auto vi = value_iteration(env, env.blocked());
  const auto ref = oracle::grid_values(env, env.blocked());
  for (int s = 0; s < env.state_count(); ++s) {
    if (!env.is_blocked(s)) EXPECT_NEAR(vi.values[s], ref[s], 1e-9) << "state " << s;
  }
}

TEST(ValueIteration, IsBellmanFixedPoint) {
  const auto env = corridor();
  const auto vi = value_iteration(env);
  const auto backed = bellman_backup(env, vi.values);
  for (int s = 0; s < env.state_count(); ++s) EXPECT_NEAR(backed[s], vi.values[s], 1e-10);
}

TEST(ArgmaxLowest, BreaksTiesTowardLowIndex) {
  const std::vector<double> q{0.5, 0.9, 0.9 - 1e-9, 0.1};
  EXPECT_EQ(argmax_lowest(q), 1);
  const std::vector<double> tie{0.2, 0.7, 0.7};
  EXPECT_EQ(argmax_lowest(tie), 1);
}

TEST(AdmissibleActions, NeverEnterBlockedRegion) {
  const auto env = corridor();
  for (int s = 0; s < env.state_count(); ++s) {
    for (int a : admissible_actions(env, s)) {
      for (const auto& tr : env.transitions(s, a)) EXPECT_FALSE(env.is_blocked(tr.next) && tr.next != s);
    }
  }
}

TEST(PointMass, BuildsTabularLatticeWithTarget) {
  EnvSpec spec;
  spec.family = EnvFamily::PointMass;
  spec.size = 2;
  spec.start = {-2, -2};
  spec.goal = {0, 0};
  spec.blocked = {{-1, -2}};
  spec.max_episode_steps = 20;
  const auto env = build_env(spec, 4);
  EXPECT_TRUE(env.lattice().has_value());
  EXPECT_EQ(env.state_count(), 25);
  EXPECT_EQ(env.action_count(), 9);
  EXPECT_TRUE(env.has_blocked_region());
  for (int s = 0; s < env.state_count(); ++s) ASSERT_TRUE(env.decode(Space::Learner, env.observe(Space::Learner, s)));
}
