#include "hoil/baselines.hpp"

#include <array>
#include <stdexcept>

namespace hoil {

namespace {

constexpr std::array<const char*, 6> kMethodNames{"iwre", "bc", "gail", "iw", "lbc", "rl_oracle"};

}  // namespace

const char* method_name(Method m) { return kMethodNames.at(static_cast<std::size_t>(m)); }

Method parse_method(const std::string& name) {
  for (std::size_t i = 0; i < kMethodNames.size(); ++i) {
    if (name == kMethodNames[i]) return static_cast<Method>(i);
  }
  throw std::invalid_argument("unknown method '" + name + "'");
}

NeuralPolicy bc_train(const DualObsEnv& env, const std::vector<Trajectory>& evolving, const IwreConfig& cfg,
                      std::uint64_t seed) {
  const auto steps = flatten_steps(evolving);
  if (steps.empty()) throw std::invalid_argument("behavior cloning needs evolving data");
  Rng init(derive_seed(seed, streams::kPolicyInit));
  Rng bc(derive_seed(seed, streams::kBc));
  NeuralPolicy pi = NeuralPolicy::create(env.obs_dim(Space::Learner), env.action_count(), Space::Learner, cfg.hidden, init);
  std::vector<std::vector<double>> obs;
  std::vector<int> actions;
  for (const auto& s : steps) {
    obs.push_back(s.obs_l);
    actions.push_back(s.action);
  }
  behavior_clone(pi, stack_columns(obs), actions, cfg.bc_epochs, cfg.batch_size, cfg.learning_rate, bc);
  return pi;
}

TrainResult gail_train(const DualObsEnv& env, const std::vector<Trajectory>& evolving, const IwreConfig& cfg,
                       const SupportPartition* truth, std::uint64_t seed) {
  TrainInputs in;
  in.env = &env;
  in.evolving = &evolving;
  in.truth = truth;
  in.source = RewardSource::PlainDiscriminator;
  return train(in, cfg, QueryBudget(0), seed);
}

TrainResult iw_train(const DualObsEnv& env, const PretrainOutput& pretrained, const IwreConfig& cfg,
                     const SupportPartition* truth, std::uint64_t seed) {
  TrainInputs in;
  in.env = &env;
  in.pretrained = &pretrained;
  in.truth = truth;
  in.source = RewardSource::WeightedDiscriminator;
  return train(in, cfg, QueryBudget(0), seed);
}

LbcResult lbc_train(const DualObsEnv& env, const Policy& pi_1, const IwreConfig& cfg, const LbcConfig& lbc,
                    const SupportPartition* truth, std::uint64_t seed) {
  if (pi_1.space() != Space::Expert) throw std::invalid_argument("the LBC teacher reads O_E");
  Rng init(derive_seed(seed, streams::kPolicyInit));
  Rng rollouts(derive_seed(seed, streams::kRollouts));
  Rng fit(derive_seed(seed, streams::kBc));
  Rng eval(derive_seed(seed, streams::kEval));
  LbcResult r{NeuralPolicy::create(env.obs_dim(Space::Learner), env.action_count(), Space::Learner, cfg.hidden, init),
              {}, {}};
  std::vector<std::vector<double>> obs;
  std::vector<int> labels;
  long steps_done = 0;
  const auto record = [&] {
    const EvalResult er = evaluate(r.policy, env, cfg.eval_episodes, eval);
    MetricRecord m;
    m.step = steps_done;
    m.mean_return = er.mean_return;
    m.std_return = er.std_return;
    m.queries_used = steps_done;
    if (truth) m.h_visit_fraction = visit_fraction(er.visited, *truth, TernaryLabel::LatentDemo);
    r.metrics.push_back(m);
  };
  record();
  for (int round = 0; round < lbc.rounds; ++round) {
    for (int e = 0; e < lbc.episodes_per_round; ++e) {
      // The first round follows the teacher so the data set starts on its support.
      const Policy& actor = round == 0 ? pi_1 : static_cast<const Policy&>(r.policy);
      const Trajectory traj = rollout(env, actor, rollouts, true);
      for (const auto& s : traj.steps) {
        obs.push_back(s.obs_l);
        labels.push_back(pi_1.greedy_action(s.obs_e));
      }
      steps_done += static_cast<long>(traj.steps.size());
    }
    behavior_clone(r.policy, stack_columns(obs), labels, lbc.epochs, lbc.batch_size, cfg.learning_rate, fit);
    r.dataset_sizes.push_back(obs.size());
    record();
  }
  return r;
}

TrainResult rl_oracle_train(const DualObsEnv& env, const IwreConfig& cfg, const SupportPartition* truth,
                            std::uint64_t seed) {
  TrainInputs in;
  in.env = &env;
  in.truth = truth;
  in.source = RewardSource::TrueReward;
  in.bc_init = false;
  return train(in, cfg, QueryBudget(0), seed);
}

}  // namespace hoil
