#include <gtest/gtest.h>

#include <numeric>

#include "hoil/config.hpp"
#include "hoil/data.hpp"
#include "hoil/policy.hpp"
#include "hoil/selfcheck.hpp"
#include "oracles.hpp"

using namespace hoil;

namespace {

DualObsEnv corridor(std::uint64_t seed = 0) { return build_env(corridor_config().env, seed); }

}  // namespace

TEST(Policies, RowsAreDistributions) {
  const auto env = corridor();
  for (const auto& pi : {expert_policy(env), auxiliary_policy(env, 0.1), uniform_policy(env, Space::Expert)}) {
    for (const auto& row : pi.table()) {
      EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-12);
      for (double p : row) EXPECT_GE(p, 0.0);
    }
  }
}

TEST(Policies, ExpertReachesGoalOnShortestPath) {
  const auto env = corridor();
  const auto pi = expert_policy(env);
  Rng rng(0);
  const auto traj = rollout(env, pi, rng, true, ActionMode::Greedy);
  EXPECT_TRUE(traj.terminated);
  EXPECT_EQ(traj.steps.size(), 4u);
  EXPECT_EQ(traj.episode_return, 1.0);
}

TEST(Policies, AuxiliaryNeverEntersBlockedRegion) {
  const auto env = corridor();
  const auto pi = auxiliary_policy(env, 0.3);
  Rng rng(1);
  for (int e = 0; e < 500; ++e) {
    for (const auto& st : rollout(env, pi, rng, true).steps) EXPECT_FALSE(env.is_blocked(st.latent_state));
  }
}

TEST(Policies, AuxiliaryRequiresBlockedRegion) {
  EnvSpec spec = corridor_config().env;
  spec.blocked.clear();
  EXPECT_THROW(auxiliary_policy(build_env(spec, 0), 0.1), std::invalid_argument);
}

TEST(Policies, NeuralPolicyProbabilitiesSumToOne) {
  Rng rng(2);
  const auto pi = NeuralPolicy::create(3, 4, Space::Learner, {8}, rng);
  const std::vector<double> obs{0.1, -0.4, 2.0};
  const auto p = pi.probabilities(obs);
  EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
  EXPECT_TRUE(std::isfinite(pi.value(obs)));
}

TEST(Rollout, RespectsEpisodeCapAndRecordsBothSpaces) {
  const auto env = corridor();
  const auto pi = uniform_policy(env, Space::Expert);
  Rng rng(3);
  for (int e = 0; e < 100; ++e) {
    const auto traj = rollout(env, pi, rng, true);
    EXPECT_LE(static_cast<int>(traj.steps.size()), env.max_episode_steps());
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      EXPECT_EQ(traj.steps[t].t, static_cast<int>(t));
      EXPECT_TRUE(traj.steps[t].has(Space::Expert));
      EXPECT_TRUE(traj.steps[t].has(Space::Learner));
    }
  }
}

TEST(Occupancy, SupportMatchesLayeredOracle) {
  for (std::uint64_t seed : {0, 7}) {
    const auto env = corridor(seed);
    for (const auto& pi : {expert_policy(env), auxiliary_policy(env, 0.1), uniform_policy(env, Space::Expert)}) {
      EXPECT_EQ(occupancy_support(env, pi), oracle::reachable_pairs(env, pi.table()));
    }
  }
}

TEST(Occupancy, PartitionMatchesOracle) {
  const auto env = corridor();
  const auto pe = expert_policy(env);
  const auto p1 = auxiliary_policy(env, 0.1);
  const auto part = support_sets(env, pe, p1);
  EXPECT_EQ(part.labels, oracle::partition(env, pe.table(), p1.table()));
  EXPECT_GT(part.count(TernaryLabel::LatentDemo), 0u);
  EXPECT_GT(part.count(TernaryLabel::ObservedDemo), 0u);
  // Every latent pair sits in the blocked corridor or steps into it.
  for (auto [s, a] : part.members(TernaryLabel::LatentDemo)) {
    EXPECT_TRUE(env.is_blocked(s) || env.is_blocked(env.transitions(s, a).front().next));
  }
}

TEST(Occupancy, ExactMatchesPathEnumeration) {
  const auto env = corridor();
  for (const auto& pi : {auxiliary_policy(env, 0.2), uniform_policy(env, Space::Expert)}) {
    const auto lib = exact_occupancy(env, pi);
    const auto ref = oracle::enumerated_occupancy(env, pi.table());
    ASSERT_EQ(lib.size(), ref.size());
    for (std::size_t i = 0; i < lib.size(); ++i) EXPECT_NEAR(lib[i], ref[i], 1e-12);
  }
}

TEST(Occupancy, LongHorizonMatchesLinearSolve) {
  const auto env = three_state_mdp(0.8, 200);
  const auto pi = three_state_policy(env);
  const auto lib = exact_occupancy(env, pi);
  const auto ref = oracle::linear_occupancy(env, pi.table());
  for (std::size_t i = 0; i < lib.size(); ++i) EXPECT_NEAR(lib[i], ref[i], 1e-12);
  // Discounted mass sums to 1 / (1 - gamma).
  EXPECT_NEAR(std::accumulate(ref.begin(), ref.end(), 0.0), 5.0, 1e-9);
}

TEST(Occupancy, SampledWeightsAreDiscounts) {
  const auto env = three_state_mdp();
  const auto pi = three_state_policy(env);
  Rng rng(4);
  for (const auto& s : sample_occupancy(env, pi, 500, rng)) {
    EXPECT_DOUBLE_EQ(s.weight, std::pow(env.gamma(), s.instance.t));
  }
}

TEST(TotalVariation, KnownValues) {
  EXPECT_DOUBLE_EQ(total_variation({1, 0}, {0, 1}), 1.0);
  EXPECT_DOUBLE_EQ(total_variation({2, 2}, {1, 1}), 0.0);
  EXPECT_NEAR(total_variation({0.5, 0.5, 0}, {0.25, 0.25, 0.5}), 0.5, 1e-15);
  EXPECT_THROW(total_variation({1}, {1, 2}), std::invalid_argument);
}
