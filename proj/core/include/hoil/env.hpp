#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hoil/types.hpp"

namespace hoil {

struct Cell {
  int row = 0;
  int col = 0;
  auto operator<=>(const Cell&) const = default;
};

struct Transition {
  int next = 0;
  double prob = 1.0;
};

/// Grid actions, in tie-break order.
enum GridAction : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

struct GridLayout {
  int width = 0;
  int height = 0;
  Cell start;
  Cell goal;
  std::vector<Cell> blocked;
};

struct LatticeLayout {
  int half_cells = 0;  // coordinates run over [-half_cells, half_cells]
  double spacing = 1.0;
  Cell target;  // offset from the origin, in lattice units (row = y, col = x)
  std::vector<int> velocity_steps;
};

/// Everything needed to build a DualObsEnv. Factories fill this in; tests
/// may also construct small fixtures directly.
struct MdpDefinition {
  std::string id;
  int state_count = 0;
  int action_count = 0;
  std::vector<std::vector<std::vector<Transition>>> kernel;  // [s][a] -> successors
  std::vector<std::vector<double>> reward;                   // [s][a]
  std::vector<bool> terminal;
  std::vector<double> start_distribution;
  double gamma = 0.99;
  int max_episode_steps = 50;
  std::vector<std::vector<double>> encoder_e;  // [s] -> O_E vector
  std::vector<std::vector<double>> encoder_l;  // [s] -> O_L vector
  std::vector<bool> blocked;                   // metadata for the auxiliary policy
  std::optional<GridLayout> grid;
  std::optional<LatticeLayout> lattice;
};

/// A tabular MDP with one latent state space observed through two
/// injective encoders. Immutable after construction.
class DualObsEnv {
 public:
  explicit DualObsEnv(MdpDefinition def);

  struct StepResult {
    int next_state = 0;
    bool done = false;
    double reward = 0.0;
  };

  const std::string& id() const { return def_.id; }
  int state_count() const { return def_.state_count; }
  int action_count() const { return def_.action_count; }
  double gamma() const { return def_.gamma; }
  int max_episode_steps() const { return def_.max_episode_steps; }
  int obs_dim(Space space) const;

  const std::vector<double>& observe(Space space, int state) const;

  /// Inverse encoder by exact lookup. Test/oracle use only; learners never see latent states.
  std::optional<int> decode(Space space, std::span<const double> obs) const;

  const std::vector<Transition>& transitions(int state, int action) const;
  double true_reward(int state, int action) const;
  bool is_terminal(int state) const { return def_.terminal.at(state); }
  bool is_blocked(int state) const { return def_.blocked.at(state); }
  bool has_blocked_region() const;
  const std::vector<bool>& blocked() const { return def_.blocked; }
  const std::vector<double>& start_distribution() const { return def_.start_distribution; }
  int sample_start(Rng& rng) const;

  StepResult step(int state, int action, Rng& rng) const;

  const std::optional<GridLayout>& grid() const { return def_.grid; }
  const std::optional<LatticeLayout>& lattice() const { return def_.lattice; }
  int cell_to_state(Cell c) const;
  Cell state_to_cell(int state) const;

  const MdpDefinition& definition() const { return def_; }

  /// Copy with a different episode cap.
  DualObsEnv with_max_episode_steps(int steps) const;

 private:
  void validate() const;
  void check_state(int s) const;
  void check_action(int a) const;

  MdpDefinition def_;
  std::map<std::vector<double>, int> inverse_e_;
  std::map<std::vector<double>, int> inverse_l_;
};

struct GridOptions {
  Cell start{0, 0};
  double gamma = 0.99;
  int max_episode_steps = 50;
};

/// Gridworld: latent state is the agent cell. O_E is a seeded permutation of
/// one-hot state indices; O_L is a seeded invertible affine map of the
/// normalized (row, col) pair.
DualObsEnv make_dual_grid(int width, int height, Cell goal, std::vector<Cell> blocked_region,
                          std::uint64_t seed, GridOptions options = {});

struct PointMassOptions {
  double gamma = 0.95;
  int max_episode_steps = 100;
  std::optional<std::pair<double, double>> scale_e;  // default identity
  std::optional<std::pair<double, double>> scale_l;  // default drawn from seed
  Cell target{0, 0};                                 // lattice offsets from the origin
  std::optional<Cell> start;                         // offsets; default bottom-left corner
  std::vector<Cell> masked;                          // offsets of the masked sub-arena
};

/// 2-D point mass on an integer lattice with action_grid^2 velocity actions.
/// Observations are rotation-then-diagonal-scaling of the position.
DualObsEnv make_dual_pointmass(double arena_half_width, double rotation_e, double rotation_l,
                               int action_grid, std::uint64_t seed, PointMassOptions options = {});

/// One-hot encoder rows for n states (identity order).
std::vector<std::vector<double>> one_hot_rows(int n);

struct ValueIterationResult {
  std::vector<double> values;
  std::vector<std::vector<double>> q;  // [s][a]
  int sweeps = 0;
};

/// Tabular value iteration on true rewards. States flagged in `impassable`
/// cannot be entered: any transition into one leaves the agent in place.
/// Throws std::runtime_error if not converged within max_sweeps.
ValueIterationResult value_iteration(const DualObsEnv& env, const std::vector<bool>& impassable = {},
                                     double tolerance = 1e-10, int max_sweeps = 10000);

/// One Bellman optimality backup of `values`; used to verify fixed points.
std::vector<double> bellman_backup(const DualObsEnv& env, const std::vector<double>& values,
                                   const std::vector<bool>& impassable = {});

/// Lowest-index maximizer of q (ties within `tie_tolerance`).
int argmax_lowest(std::span<const double> q, double tie_tolerance = 1e-7);

/// Actions at `state` none of whose successors is a blocked state. Falls back
/// to all actions when every action would enter the blocked region.
std::vector<int> admissible_actions(const DualObsEnv& env, int state);

}  // namespace hoil
