#include <benchmark/benchmark.h>

#include "hoil/config.hpp"
#include "hoil/dataset_io.hpp"
#include "hoil/iwre.hpp"

using namespace hoil;

namespace {

DualObsEnv corridor() { return build_env(corridor_config().env, 0); }

Eigen::MatrixXd pair_batch(int obs_dim, int actions, int n, Rng& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(obs_dim + actions, n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < obs_dim; ++k) x(k, i) = normal(rng);
    x(obs_dim + i % actions, i) = 1.0;
  }
  return x;
}

}  // namespace

static void BM_DiscriminatorGradient(benchmark::State& state) {
  Rng rng(0);
  const int n = static_cast<int>(state.range(0));
  const auto d = PairModel::create(Space::Learner, 2, 4, {64, 64}, rng);
  const Eigen::MatrixXd pos = pair_batch(2, 4, n, rng);
  const Eigen::MatrixXd neg = pair_batch(2, 4, n, rng);
  const Eigen::VectorXd alpha = Eigen::VectorXd::Ones(n);
  for (auto _ : state) benchmark::DoNotOptimize(weighted_d2_loss(d, pos, neg, alpha).value);
  state.SetItemsProcessed(state.iterations() * 2 * n);
}
BENCHMARK(BM_DiscriminatorGradient)->Arg(128)->Arg(512);

static void BM_RejectionLoss(benchmark::State& state) {
  Rng rng(1);
  const int n = static_cast<int>(state.range(0));
  const auto d = PairModel::create(Space::Expert, 25, 4, {64, 64}, rng);
  const auto g = PairModel::create(Space::Expert, 25, 4, {64, 64}, rng);
  const Eigen::MatrixXd x = pair_batch(25, 4, n, rng);
  Eigen::VectorXd t(n);
  for (int i = 0; i < n; ++i) t[i] = i % 2;
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  const RejectionConfig rc;
  for (auto _ : state) benchmark::DoNotOptimize(rejection_loss(d, g, x, t, w, rc).total);
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_RejectionLoss)->Arg(256);

static void BM_PolicyUpdate(benchmark::State& state) {
  Rng rng(2);
  const auto env = corridor();
  auto pi = NeuralPolicy::create(env.obs_dim(Space::Learner), env.action_count(), Space::Learner, {64, 64}, rng);
  std::vector<DualInstance> steps;
  while (steps.size() < 256) {
    for (const auto& s : rollout(env, pi, rng, false).steps) steps.push_back(s);
  }
  const std::vector<double> rewards(steps.size(), 0.5);
  const PolicyBatch batch = prepare_policy_batch(pi, steps, rewards, env.gamma());
  AdamConfig ac;
  ac.total_steps = 1L << 40;
  Adam opt(pi.net().parameter_count(), ac);
  for (auto _ : state) benchmark::DoNotOptimize(policy_update(pi, batch, opt, PpoConfig{}));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(steps.size()));
}
BENCHMARK(BM_PolicyUpdate);

static void BM_Rollout(benchmark::State& state) {
  const auto env = corridor();
  const auto pi = auxiliary_policy(env, 0.1);
  Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(rollout(env, pi, rng, true).steps.size());
}
BENCHMARK(BM_Rollout);

static void BM_ExactOccupancy(benchmark::State& state) {
  const auto env = corridor();
  const auto pi = auxiliary_policy(env, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(exact_occupancy(env, pi).data());
}
BENCHMARK(BM_ExactOccupancy);

static void BM_LabelAllPairs(benchmark::State& state) {
  Rng rng(4);
  const auto env = corridor();
  const auto d = PairModel::create(Space::Expert, env.obs_dim(Space::Expert), env.action_count(), {64, 64}, rng);
  const auto g = PairModel::create(Space::Expert, env.obs_dim(Space::Expert), env.action_count(), {64, 64}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(label_all_pairs(d, g, env).data());
}
BENCHMARK(BM_LabelAllPairs);

static void BM_DatasetRoundTrip(benchmark::State& state) {
  const auto env = corridor();
  const auto pi = auxiliary_policy(env, 0.1);
  Rng rng(5);
  Dataset ds;
  ds.header = {env.id(), env.obs_dim(Space::Expert), env.obs_dim(Space::Learner), env.gamma(), 5, "evolving"};
  ds.trajectories = collect_evolving_data(env, pi, 100, rng);
  for (auto _ : state) benchmark::DoNotOptimize(parse_dataset(serialize_dataset(ds)).trajectories.size());
}
BENCHMARK(BM_DatasetRoundTrip);

BENCHMARK_MAIN();
