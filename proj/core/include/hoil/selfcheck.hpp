#pragma once

#include <string>
#include <vector>

#include "hoil/env.hpp"
#include "hoil/policy.hpp"

namespace hoil {

struct CheckResult {
  std::string name;
  double value = 0.0;      // measured error
  double threshold = 0.0;  // pass iff value < threshold
  bool pass = false;
};

/// Central-difference checks of every differentiable loss on small random
/// networks: adversarial, weighted adversarial, rejection, selective risk,
/// clipped policy surrogate and cloning cross-entropy.
std::vector<CheckResult> gradient_checks(std::uint64_t seed, double threshold = 1e-4);

/// Three-state, two-action MDP with stochastic transitions and no terminal state.
DualObsEnv three_state_mdp(double gamma = 0.8, int horizon = 60);

/// Fixed stochastic policy on three_state_mdp, reading O_E.
TabularPolicy three_state_policy(const DualObsEnv& env);

/// Total variation between two nonnegative vectors after each is normalized to sum 1.
double total_variation(const std::vector<double>& p, const std::vector<double>& q);

/// gamma^t-weighted empirical occupancy from n_samples sampled steps, indexed s * A + a.
std::vector<double> empirical_occupancy(const DualObsEnv& env, const Policy& policy, int n_samples, Rng& rng);

/// TV between the empirical and exact occupancy of the three-state fixture.
CheckResult occupancy_check(std::uint64_t seed, int n_samples = 100'000, double threshold = 0.05);

/// Largest Bellman residual of value iteration on the corridor grid.
CheckResult bellman_check(double threshold = 1e-8);

/// Save/load of a sampled data set compared byte for byte.
CheckResult dataset_roundtrip_check(std::uint64_t seed);

std::vector<CheckResult> run_all_checks(std::uint64_t seed);

}  // namespace hoil
