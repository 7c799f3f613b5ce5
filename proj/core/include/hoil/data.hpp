#pragma once

#include <array>
#include <vector>

#include "hoil/env.hpp"
#include "hoil/policy.hpp"

namespace hoil {

/// One (observation, action) pair in a single space. latent_state is kept for
/// oracle checks and the observation-coexistence query; learners never read it.
struct Instance {
  std::vector<double> obs;
  int action = 0;
  Space space = Space::Learner;
  int latent_state = -1;
  int t = 0;
};

/// One recorded step. obs_e / obs_l are both filled for dual recordings;
/// otherwise only the side the acting policy reads is present.
struct DualInstance {
  std::vector<double> obs_e;
  std::vector<double> obs_l;
  int action = 0;
  int latent_state = -1;
  int t = 0;
  double reward = 0.0;

  bool has(Space s) const { return !(s == Space::Expert ? obs_e : obs_l).empty(); }
  Instance view(Space s) const;
  bool operator==(const DualInstance&) const = default;
};

struct Trajectory {
  std::vector<DualInstance> steps;
  double episode_return = 0.0;
  bool terminated = false;
  bool operator==(const Trajectory&) const = default;
};

struct OccupancySample {
  Instance instance;
  double weight = 1.0;  // gamma^t
};

/// H / O / N partition of all (state, action) pairs, indexed s * A + a.
struct SupportPartition {
  int state_count = 0;
  int action_count = 0;
  std::vector<TernaryLabel> labels;

  TernaryLabel at(int state, int action) const { return labels.at(state * action_count + action); }
  std::size_t count(TernaryLabel l) const;
  std::vector<std::pair<int, int>> members(TernaryLabel l) const;
};

enum class ActionMode : std::uint8_t { Sample, Greedy };

Trajectory rollout(const DualObsEnv& env, const Policy& policy, Rng& rng, bool record_dual,
                   ActionMode mode = ActionMode::Sample);

std::vector<OccupancySample> sample_occupancy(const DualObsEnv& env, const Policy& policy, int n_samples, Rng& rng);

/// Dual-recorded rollouts of the auxiliary policy.
std::vector<Trajectory> collect_evolving_data(const DualObsEnv& env, const Policy& pi_1, int n_trajectories,
                                              Rng& rng);

std::vector<DualInstance> flatten_steps(const std::vector<Trajectory>& trajectories);

/// Exact support of a policy's occupancy measure: (s,a) is in the support iff s
/// is reachable from the start distribution within the episode cap and the
/// policy gives a positive probability. Indexed s * A + a.
std::vector<bool> occupancy_support(const DualObsEnv& env, const Policy& policy);

SupportPartition support_sets(const DualObsEnv& env, const Policy& pi_E, const Policy& pi_1);

/// Analytic discounted state-action occupancy, sum_t gamma^t Pr(s_t=s, a_t=a),
/// truncated at the episode cap. Indexed s * A + a.
std::vector<double> exact_occupancy(const DualObsEnv& env, const Policy& policy);

}  // namespace hoil
