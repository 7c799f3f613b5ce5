#pragma once

// Reference computations that share no code with the library beyond the
// environment's public accessors.

#include <vector>

#include "hoil/env.hpp"
#include "hoil/types.hpp"

namespace oracle {

using Table = std::vector<std::vector<double>>;  // [s][a]

/// Infinite-horizon discounted occupancy rho(s,a) = d(s) pi(a|s), with
/// d = (I - gamma P_pi^T)^{-1} mu; terminal states have no outgoing mass.
std::vector<double> linear_occupancy(const hoil::DualObsEnv& env, const Table& pi);

/// Occupancy truncated at the episode cap, by summing over every path.
std::vector<double> enumerated_occupancy(const hoil::DualObsEnv& env, const Table& pi);

/// (s,a) pairs visited with positive probability before the cap, computed
/// layer by layer over (state, time).
std::vector<bool> reachable_pairs(const hoil::DualObsEnv& env, const Table& pi);

/// H (+1) / O (0) / N (-1) labels from the two supports.
std::vector<hoil::TernaryLabel> partition(const hoil::DualObsEnv& env, const Table& pi_e, const Table& pi_1);

/// Optimal values of a unit goal-entry reward on a grid: gamma^(d-1) where d
/// is the BFS distance to the goal; cells in `impassable` are never entered.
std::vector<double> grid_values(const hoil::DualObsEnv& env, const std::vector<bool>& impassable = {});

inline double optimal_d(double rho_1, double rho_e) { return rho_1 / (rho_1 + rho_e); }
inline double density_ratio(double rho_1, double rho_e) { return rho_e / rho_1; }

}  // namespace oracle
