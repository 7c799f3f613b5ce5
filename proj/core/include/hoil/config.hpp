#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hoil/baselines.hpp"

namespace hoil {

enum class EnvFamily : std::uint8_t { Grid, PointMass };

struct EnvSpec {
  EnvFamily family = EnvFamily::Grid;
  int size = 5;                   // grid side, or lattice half width for the point mass
  std::vector<Cell> blocked;      // region pi_1 avoids
  Cell start{4, 0};
  Cell goal{0, 0};
  int max_episode_steps = 5;
  double gamma = 0.99;
  double pi1_epsilon = 0.1;       // uniform mixing of pi_1 over admissible actions
  int action_grid = 3;            // point mass only
};

struct ExperimentConfig {
  EnvSpec env;
  Method method = Method::IWRE;
  int n_demo_trajectories = 20;
  double budget_ratio = std::numeric_limits<double>::infinity();  // inf = unlimited
  int seeds = 5;
  std::uint64_t first_seed = 0;
  std::filesystem::path out_dir = "runs";
  IwreConfig train;  // total_steps, lr, batch_size, ... live here
  LbcConfig lbc;

  void validate() const;
};

/// Built-in configuration of the blocked-corridor HOIL task.
ExperimentConfig corridor_config();

/// INI text with optional [env], [train] and [lbc] sections. Top-level keys are
/// the flat names listed in config_keys(); unknown keys are rejected.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = corridor_config());
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = corridor_config());

/// Sets one key, e.g. "env.size" or "budget_ratio", from its text form.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const ExperimentConfig& cfg, const std::string& key);
const std::vector<std::string>& config_keys();

/// Round-trips through parse_config.
std::string to_ini(const ExperimentConfig& cfg);

std::vector<Cell> parse_cells(const std::string& text);  // "1,0;2,0"
std::string format_cells(const std::vector<Cell>& cells);

DualObsEnv build_env(const EnvSpec& spec, std::uint64_t seed);

}  // namespace hoil
