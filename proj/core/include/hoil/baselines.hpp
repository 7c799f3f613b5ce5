#pragma once

#include <string>

#include "hoil/iwre.hpp"

namespace hoil {

enum class Method : std::uint8_t { IWRE, BC, GAIL, IW, LBC, RLOracle };

const char* method_name(Method m);
Method parse_method(const std::string& name);

/// Maximum-likelihood softmax policy on the O_L half of the evolving data.
NeuralPolicy bc_train(const DualObsEnv& env, const std::vector<Trajectory>& evolving, const IwreConfig& cfg,
                      std::uint64_t seed);

/// Adversarial imitation with the O_L evolving data as the demonstration side;
/// no importance weights and no queries.
TrainResult gail_train(const DualObsEnv& env, const std::vector<Trajectory>& evolving, const IwreConfig& cfg,
                       const SupportPartition* truth, std::uint64_t seed);

/// IWRE with the rejection and query path disabled.
TrainResult iw_train(const DualObsEnv& env, const PretrainOutput& pretrained, const IwreConfig& cfg,
                     const SupportPartition* truth, std::uint64_t seed);

struct LbcConfig {
  int rounds = 10;
  int episodes_per_round = 10;
  int epochs = 100;
  int batch_size = 256;
};

struct LbcResult {
  NeuralPolicy policy;
  std::vector<std::size_t> dataset_sizes;  // aggregated size after each round
  std::vector<MetricRecord> metrics;
};

/// DAgger: roll out pi_2 under O_L, label every visited state with pi_1's
/// greedy action at f_E(s), aggregate, refit.
LbcResult lbc_train(const DualObsEnv& env, const Policy& pi_1, const IwreConfig& cfg, const LbcConfig& lbc,
                    const SupportPartition* truth, std::uint64_t seed);

/// Policy optimization on true rewards under O_L.
TrainResult rl_oracle_train(const DualObsEnv& env, const IwreConfig& cfg, const SupportPartition* truth,
                            std::uint64_t seed);

}  // namespace hoil
