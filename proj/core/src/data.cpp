#include "hoil/data.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace hoil {

Instance DualInstance::view(Space s) const {
  if (!has(s)) throw std::logic_error("instance was not recorded in the requested space");
  return Instance{s == Space::Expert ? obs_e : obs_l, action, s, latent_state, t};
}

std::size_t SupportPartition::count(TernaryLabel l) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), l));
}

std::vector<std::pair<int, int>> SupportPartition::members(TernaryLabel l) const {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < static_cast<int>(labels.size()); ++i) {
    if (labels[i] == l) out.emplace_back(i / action_count, i % action_count);
  }
  return out;
}

Trajectory rollout(const DualObsEnv& env, const Policy& policy, Rng& rng, bool record_dual, ActionMode mode) {
  if (policy.action_count() != env.action_count()) throw std::invalid_argument("policy/env action count mismatch");
  Trajectory traj;
  int s = env.sample_start(rng);
  for (int t = 0; t < env.max_episode_steps(); ++t) {
    const auto& obs = env.observe(policy.space(), s);
    const int a = mode == ActionMode::Greedy ? policy.greedy_action(obs) : policy.sample_action(obs, rng);
    DualInstance step;
    if (record_dual || policy.space() == Space::Expert) step.obs_e = env.observe(Space::Expert, s);
    if (record_dual || policy.space() == Space::Learner) step.obs_l = env.observe(Space::Learner, s);
    step.action = a;
    step.latent_state = s;
    step.t = t;
    const auto result = env.step(s, a, rng);
    step.reward = result.reward;
    traj.steps.push_back(std::move(step));
    traj.episode_return += result.reward;
    s = result.next_state;
    if (result.done) {
      traj.terminated = true;
      break;
    }
  }
  return traj;
}

std::vector<OccupancySample> sample_occupancy(const DualObsEnv& env, const Policy& policy, int n_samples, Rng& rng) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  std::vector<OccupancySample> out;
  out.reserve(static_cast<std::size_t>(n_samples));
  while (static_cast<int>(out.size()) < n_samples) {
    const auto traj = rollout(env, policy, rng, false);
    for (const auto& step : traj.steps) {
      if (static_cast<int>(out.size()) == n_samples) break;
      out.push_back({step.view(policy.space()), std::pow(env.gamma(), step.t)});
    }
  }
  return out;
}

std::vector<Trajectory> collect_evolving_data(const DualObsEnv& env, const Policy& pi_1, int n_trajectories,
                                              Rng& rng) {
  if (n_trajectories < 1) throw std::invalid_argument("n_trajectories must be >= 1");
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(n_trajectories));
  for (int i = 0; i < n_trajectories; ++i) out.push_back(rollout(env, pi_1, rng, true));
  return out;
}

std::vector<DualInstance> flatten_steps(const std::vector<Trajectory>& trajectories) {
  std::vector<DualInstance> out;
  for (const auto& traj : trajectories) out.insert(out.end(), traj.steps.begin(), traj.steps.end());
  return out;
}

namespace {

std::vector<std::vector<double>> policy_table(const DualObsEnv& env, const Policy& policy) {
  std::vector<std::vector<double>> table(env.state_count());
  for (int s = 0; s < env.state_count(); ++s) table[s] = policy.probabilities(env.observe(policy.space(), s));
  return table;
}

}  // namespace

std::vector<bool> occupancy_support(const DualObsEnv& env, const Policy& policy) {
  const int S = env.state_count();
  const int A = env.action_count();
  const auto table = policy_table(env, policy);
  // Earliest visit time suffices: anything reachable later from s is also
  // reachable from the earliest visit.
  std::vector<int> first_visit(S, -1);
  std::deque<int> queue;
  for (int s = 0; s < S; ++s) {
    if (env.start_distribution()[s] > 0.0) {
      first_visit[s] = 0;
      queue.push_back(s);
    }
  }
  std::vector<bool> support(static_cast<std::size_t>(S) * A, false);
  while (!queue.empty()) {
    const int s = queue.front();
    queue.pop_front();
    if (env.is_terminal(s)) continue;
    for (int a = 0; a < A; ++a) {
      if (table[s][a] <= 0.0) continue;
      support[static_cast<std::size_t>(s) * A + a] = true;
      if (first_visit[s] + 1 >= env.max_episode_steps()) continue;
      for (const auto& tr : env.transitions(s, a)) {
        if (tr.prob > 0.0 && first_visit[tr.next] < 0) {
          first_visit[tr.next] = first_visit[s] + 1;
          queue.push_back(tr.next);
        }
      }
    }
  }
  return support;
}

SupportPartition support_sets(const DualObsEnv& env, const Policy& pi_E, const Policy& pi_1) {
  const auto expert = occupancy_support(env, pi_E);
  const auto aux = occupancy_support(env, pi_1);
  SupportPartition part;
  part.state_count = env.state_count();
  part.action_count = env.action_count();
  part.labels.resize(expert.size());
  for (std::size_t i = 0; i < expert.size(); ++i) {
    if (!expert[i]) {
      part.labels[i] = TernaryLabel::NonExpert;
    } else {
      part.labels[i] = aux[i] ? TernaryLabel::ObservedDemo : TernaryLabel::LatentDemo;
    }
  }
  return part;
}

std::vector<double> exact_occupancy(const DualObsEnv& env, const Policy& policy) {
  const int S = env.state_count();
  const int A = env.action_count();
  const auto table = policy_table(env, policy);
  std::vector<double> occ(static_cast<std::size_t>(S) * A, 0.0);
  std::vector<double> dist = env.start_distribution();
  double discount = 1.0;
  for (int t = 0; t < env.max_episode_steps(); ++t) {
    std::vector<double> next(S, 0.0);
    for (int s = 0; s < S; ++s) {
      if (dist[s] == 0.0 || env.is_terminal(s)) continue;
      for (int a = 0; a < A; ++a) {
        const double mass = dist[s] * table[s][a];
        if (mass == 0.0) continue;
        occ[static_cast<std::size_t>(s) * A + a] += discount * mass;
        for (const auto& tr : env.transitions(s, a)) next[tr.next] += mass * tr.prob;
      }
    }
    dist = std::move(next);
    discount *= env.gamma();
  }
  return occ;
}

}  // namespace hoil
