#include "oracles.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <functional>
#include <set>

namespace oracle {

std::vector<double> linear_occupancy(const hoil::DualObsEnv& env, const Table& pi) {
  const int S = env.state_count();
  const int A = env.action_count();
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(S, S);
  for (int s = 0; s < S; ++s) {
    if (env.is_terminal(s)) continue;
    for (int a = 0; a < A; ++a) {
      for (const auto& tr : env.transitions(s, a)) m(tr.next, s) -= env.gamma() * pi[s][a] * tr.prob;
    }
  }
  Eigen::VectorXd mu(S);
  for (int s = 0; s < S; ++s) mu[s] = env.start_distribution()[s];
  const Eigen::VectorXd d = m.fullPivLu().solve(mu);
  std::vector<double> rho(static_cast<std::size_t>(S) * A, 0.0);
  for (int s = 0; s < S; ++s) {
    if (env.is_terminal(s)) continue;
    for (int a = 0; a < A; ++a) rho[static_cast<std::size_t>(s) * A + a] = d[s] * pi[s][a];
  }
  return rho;
}

std::vector<double> enumerated_occupancy(const hoil::DualObsEnv& env, const Table& pi) {
  const int A = env.action_count();
  std::vector<double> rho(static_cast<std::size_t>(env.state_count()) * A, 0.0);
  std::function<void(int, int, double)> walk = [&](int s, int t, double prob) {
    if (t >= env.max_episode_steps() || env.is_terminal(s)) return;
    const double discount = std::pow(env.gamma(), t);
    for (int a = 0; a < A; ++a) {
      if (pi[s][a] <= 0.0) continue;
      rho[static_cast<std::size_t>(s) * A + a] += discount * prob * pi[s][a];
      for (const auto& tr : env.transitions(s, a)) {
        if (tr.prob > 0.0) walk(tr.next, t + 1, prob * pi[s][a] * tr.prob);
      }
    }
  };
  for (int s = 0; s < env.state_count(); ++s) {
    if (env.start_distribution()[s] > 0.0) walk(s, 0, env.start_distribution()[s]);
  }
  return rho;
}

std::vector<bool> reachable_pairs(const hoil::DualObsEnv& env, const Table& pi) {
  const int A = env.action_count();
  std::vector<bool> out(static_cast<std::size_t>(env.state_count()) * A, false);
  std::set<int> layer;
  for (int s = 0; s < env.state_count(); ++s) {
    if (env.start_distribution()[s] > 0.0) layer.insert(s);
  }
  for (int t = 0; t < env.max_episode_steps() && !layer.empty(); ++t) {
    std::set<int> next;
    for (int s : layer) {
      if (env.is_terminal(s)) continue;
      for (int a = 0; a < A; ++a) {
        if (pi[s][a] <= 0.0) continue;
        out[static_cast<std::size_t>(s) * A + a] = true;
        for (const auto& tr : env.transitions(s, a)) {
          if (tr.prob > 0.0) next.insert(tr.next);
        }
      }
    }
    layer = std::move(next);
  }
  return out;
}

std::vector<hoil::TernaryLabel> partition(const hoil::DualObsEnv& env, const Table& pi_e, const Table& pi_1) {
  const auto e = reachable_pairs(env, pi_e);
  const auto one = reachable_pairs(env, pi_1);
  std::vector<hoil::TernaryLabel> out(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e[i] && !one[i]) out[i] = hoil::TernaryLabel::LatentDemo;
    else if (e[i]) out[i] = hoil::TernaryLabel::ObservedDemo;
    else out[i] = hoil::TernaryLabel::NonExpert;
  }
  return out;
}

std::vector<double> grid_values(const hoil::DualObsEnv& env, const std::vector<bool>& impassable) {
  const auto& g = *env.grid();
  const int S = env.state_count();
  std::vector<int> dist(S, -1);
  std::deque<int> queue;
  const int goal = env.cell_to_state(g.goal);
  dist[goal] = 0;
  queue.push_back(goal);
  const int dr[] = {-1, 1, 0, 0};
  const int dc[] = {0, 0, -1, 1};
  while (!queue.empty()) {
    const int s = queue.front();
    queue.pop_front();
    const hoil::Cell c = env.state_to_cell(s);
    for (int k = 0; k < 4; ++k) {
      const hoil::Cell n{c.row + dr[k], c.col + dc[k]};
      if (n.row < 0 || n.row >= g.height || n.col < 0 || n.col >= g.width) continue;
      const int ns = env.cell_to_state(n);
      if (dist[ns] >= 0 || (!impassable.empty() && impassable[ns])) continue;
      dist[ns] = dist[s] + 1;
      queue.push_back(ns);
    }
  }
  std::vector<double> v(S, 0.0);
  for (int s = 0; s < S; ++s) {
    if (dist[s] > 0) v[s] = std::pow(env.gamma(), dist[s] - 1);
  }
  return v;
}

}  // namespace oracle
