#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hoil/config.hpp"

namespace hoil {

/// Everything shared by all methods for one seed: the environment, both
/// reference policies, the ground-truth partition and the two data sets.
struct Fixture {
  DualObsEnv env;
  TabularPolicy pi_e;
  TabularPolicy pi_1;
  SupportPartition truth;
  std::vector<Trajectory> demos;
  std::vector<Trajectory> evolving;
  double expert_return = 0.0;  // greedy, true reward
  double pi1_return = 0.0;
  std::string hash;  // SHA-256 over demos, evolving data and pi_1's table
};

Fixture make_fixture(const ExperimentConfig& cfg, std::uint64_t seed);

/// Hex SHA-256 of a fixture's shared inputs.
std::string fixture_hash(const Fixture& f);
std::string sha256_hex(const std::string& bytes);

struct Checkpoint {
  long step = 0;
  NeuralPolicy policy;
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::string fixture_hash;
  double expert_return = 0.0;
  double pi1_return = 0.0;
  std::vector<MetricRecord> metrics;
  std::vector<Checkpoint> checkpoints;  // pi_2 at each metric record
  QueryStats query_stats;
  long queries_used = 0;
  double wallclock_seconds = 0.0;

  const MetricRecord& final_record() const { return metrics.back(); }
};

/// Runs cfg.method on one seed. Component errors are caught and reported in
/// the outcome rather than thrown.
SeedOutcome run_seed(const ExperimentConfig& cfg, std::uint64_t seed);
SeedOutcome run_seed(const ExperimentConfig& cfg, const Fixture& fixture, std::uint64_t seed);

struct ExperimentSummary {
  std::vector<SeedOutcome> seeds;
  double mean_final_return = 0.0;  // over successful seeds
  double std_final_return = 0.0;
  double mean_final_h_visit = 0.0;
  double mean_expert_return = 0.0;
  double mean_pi1_return = 0.0;
  int failed = 0;
};

ExperimentSummary summarize(std::vector<SeedOutcome> outcomes);

/// Runs every seed and, when write_files is set, writes under cfg.out_dir:
///   config.ini, seed_<k>.csv, seed_<k>.wallclock, seed_<k>.policy, aggregate.csv
ExperimentSummary run_experiment(const ExperimentConfig& cfg, bool write_files = true);

/// Delimited metric file with a header row.
std::string metrics_csv(const std::vector<MetricRecord>& metrics);
std::vector<MetricRecord> parse_metrics_csv(const std::string& text);
std::string aggregate_csv(const ExperimentConfig& cfg, const ExperimentSummary& summary);

struct OverlapRow {
  std::string name;
  long step = -1;
  double h_visit = 0.0;        // fraction of ground-truth H pairs visited
  double o_visit = 0.0;        // fraction of ground-truth O pairs visited
  double n_share = 0.0;        // fraction of visits that fall in N
};

/// Greedy-rollout support comparison of pi_E, pi_1 and each pi_2 checkpoint
/// against the exact partition. Throws for non-tabular environments.
std::vector<OverlapRow> support_overlap(const DualObsEnv& env, const TabularPolicy& pi_e, const TabularPolicy& pi_1,
                                        const std::vector<Checkpoint>& checkpoints, int episodes, std::uint64_t seed);
std::string overlap_csv(const std::vector<OverlapRow>& rows);

}  // namespace hoil
