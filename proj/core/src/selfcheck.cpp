#include "hoil/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "hoil/config.hpp"
#include "hoil/dataset_io.hpp"
#include "hoil/iwre.hpp"

namespace hoil {

namespace {

constexpr int kObs = 3;
constexpr int kActions = 4;

Eigen::MatrixXd random_features(int n, Rng& rng) {
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> action(0, kActions - 1);
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(kObs + kActions, n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < kObs; ++k) f(k, i) = normal(rng);
    f(kObs + action(rng), i) = 1.0;
  }
  return f;
}

Eigen::VectorXd random_positive(int n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.2, 3.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

CheckResult make_result(std::string name, double value, double threshold) {
  return {std::move(name), value, threshold, std::isfinite(value) && value < threshold};
}

double rejection_check(const RejectionConfig& rc, Rng& rng) {
  auto d = PairModel::create(Space::Learner, kObs, kActions, {6, 5}, rng);
  auto g = PairModel::create(Space::Learner, kObs, kActions, {6, 5}, rng);
  const Eigen::MatrixXd x = random_features(12, rng);
  Eigen::VectorXd targets(12);
  for (int i = 0; i < 12; ++i) targets[i] = i % 2 == 0 ? kLearnerSide : kDemoSide;
  const Eigen::VectorXd w = random_positive(12, rng);
  const auto r = rejection_loss(d, g, x, targets, w, rc);
  return finite_diff_check({&d.net(), &g.net()}, [&] { return rejection_loss(d, g, x, targets, w, rc).total; },
                           {r.grad_d, r.grad_g});
}

}  // namespace

std::vector<CheckResult> gradient_checks(std::uint64_t seed, double threshold) {
  Rng rng(seed);
  std::vector<CheckResult> out;

  {
    auto d = PairModel::create(Space::Expert, kObs, kActions, {6, 5}, rng);
    const Eigen::MatrixXd pos = random_features(7, rng);
    const Eigen::MatrixXd neg = random_features(9, rng);
    const ModelGrad g = gail_loss(d, pos, neg);
    const double err = finite_diff_check({&d.net()}, [&] { return gail_loss(d, pos, neg).value; }, {g.gradient});
    out.push_back(make_result("adversarial loss", err, threshold));
  }
  {
    auto d = PairModel::create(Space::Learner, kObs, kActions, {6, 5}, rng);
    const Eigen::MatrixXd pos = random_features(7, rng);
    const Eigen::MatrixXd neg = random_features(9, rng);
    const Eigen::VectorXd alpha = random_positive(9, rng);
    const ModelGrad g = weighted_d2_loss(d, pos, neg, alpha);
    const double err =
        finite_diff_check({&d.net()}, [&] { return weighted_d2_loss(d, pos, neg, alpha).value; }, {g.gradient});
    out.push_back(make_result("weighted adversarial loss", err, threshold));
  }
  {
    // Coverage target above any attainable coverage keeps the hinge active.
    RejectionConfig rc;
    rc.target_coverage = 1.0;
    rc.penalty_weight = 2.0;
    out.push_back(make_result("rejection loss", rejection_check(rc, rng), threshold));
  }
  {
    RejectionConfig rc;
    rc.penalty_weight = 0.0;
    out.push_back(make_result("selective risk", rejection_check(rc, rng), threshold));
  }
  {
    auto pi = NeuralPolicy::create(kObs, kActions, Space::Learner, {6, 5}, rng);
    std::normal_distribution<double> normal;
    std::uniform_int_distribution<int> action(0, kActions - 1);
    const int n = 10;
    PolicyBatch b;
    b.obs.resize(kObs, n);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < kObs; ++k) b.obs(k, i) = normal(rng);
    }
    b.old_log_prob.resize(n);
    b.returns.resize(n);
    b.advantages.resize(n);
    for (int i = 0; i < n; ++i) {
      b.actions.push_back(action(rng));
      // Old log-probabilities spread the ratios across both sides of the clip range.
      const Eigen::VectorXd o = b.obs.col(i);
      b.old_log_prob[i] = std::log(pi.probabilities(std::span<const double>(o.data(), static_cast<std::size_t>(o.size())))[static_cast<std::size_t>(b.actions.back())]) + 0.4 * normal(rng);
      b.returns[i] = normal(rng);
      b.advantages[i] = normal(rng);
    }
    PpoConfig pc;
    pc.entropy_coef = 0.05;
    const double err = finite_diff_check(pi.net(), ppo_loss(b, kActions, pc), b.obs);
    out.push_back(make_result("policy surrogate + entropy", err, threshold));
  }
  {
    Approximator f = Approximator::orthogonal({kObs, 6, kActions}, Head::Softmax, rng);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd x(kObs, 8);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
    std::vector<int> labels{0, 1, 2, 3, 3, 2, 1, 0};
    const double err = finite_diff_check(f, losses::categorical_cross_entropy(labels, random_positive(8, rng)), x);
    out.push_back(make_result("cloning cross-entropy", err, threshold));
  }
  return out;
}

DualObsEnv three_state_mdp(double gamma, int horizon) {
  MdpDefinition def;
  def.id = "three-state";
  def.state_count = 3;
  def.action_count = 2;
  def.kernel = {
      {{{0, 0.6}, {1, 0.4}}, {{1, 0.3}, {2, 0.7}}},
      {{{0, 0.5}, {2, 0.5}}, {{1, 0.8}, {2, 0.2}}},
      {{{0, 0.9}, {2, 0.1}}, {{1, 1.0}}},
  };
  def.reward = {{0.0, 0.0}, {0.0, 1.0}, {0.5, 0.0}};
  def.terminal = {false, false, false};
  def.start_distribution = {1.0, 0.0, 0.0};
  def.gamma = gamma;
  def.max_episode_steps = horizon;
  def.encoder_e = one_hot_rows(3);
  def.encoder_l = {{0.0}, {1.0}, {2.0}};
  def.blocked = {false, false, false};
  return DualObsEnv(std::move(def));
}

TabularPolicy three_state_policy(const DualObsEnv& env) {
  return TabularPolicy(Space::Expert, {{0.3, 0.7}, {0.6, 0.4}, {0.5, 0.5}}, env.definition().encoder_e);
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("distributions differ in length");
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw std::invalid_argument("negative mass");
    sp += p[i];
    sq += q[i];
  }
  if (!(sp > 0.0 && sq > 0.0)) throw std::invalid_argument("empty distribution");
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] / sp - q[i] / sq);
  return 0.5 * tv;
}

std::vector<double> empirical_occupancy(const DualObsEnv& env, const Policy& policy, int n_samples, Rng& rng) {
  const auto samples = sample_occupancy(env, policy, n_samples, rng);
  std::vector<double> occ(static_cast<std::size_t>(env.state_count()) * env.action_count(), 0.0);
  for (const auto& s : samples) {
    const auto state = env.decode(s.instance.space, s.instance.obs);
    if (!state) throw std::logic_error("sampled observation outside the encoder");
    occ[static_cast<std::size_t>(*state) * env.action_count() + s.instance.action] += s.weight;
  }
  return occ;
}

CheckResult occupancy_check(std::uint64_t seed, int n_samples, double threshold) {
  const DualObsEnv env = three_state_mdp();
  const TabularPolicy pi = three_state_policy(env);
  Rng rng(seed);
  const double tv = total_variation(empirical_occupancy(env, pi, n_samples, rng), exact_occupancy(env, pi));
  return make_result("occupancy TV", tv, threshold);
}

CheckResult bellman_check(double threshold) {
  const DualObsEnv env = build_env(corridor_config().env, 0);
  const auto vi = value_iteration(env);
  const auto backed = bellman_backup(env, vi.values);
  double worst = 0.0;
  for (std::size_t s = 0; s < backed.size(); ++s) worst = std::max(worst, std::abs(backed[s] - vi.values[s]));
  return make_result("Bellman residual", worst, threshold);
}

CheckResult dataset_roundtrip_check(std::uint64_t seed) {
  const DualObsEnv env = build_env(corridor_config().env, seed);
  const TabularPolicy pi_1 = auxiliary_policy(env, 0.3);
  Rng rng(seed);
  Dataset ds;
  ds.header = {env.id(), env.obs_dim(Space::Expert), env.obs_dim(Space::Learner), env.gamma(), seed, "evolving"};
  ds.trajectories = collect_evolving_data(env, pi_1, 5, rng);
  const std::string bytes = serialize_dataset(ds);
  const Dataset back = parse_dataset(bytes);
  const bool same = back == ds && serialize_dataset(back) == bytes;
  return make_result("dataset round-trip", same ? 0.0 : 1.0, 0.5);
}

std::vector<CheckResult> run_all_checks(std::uint64_t seed) {
  auto out = gradient_checks(seed);
  out.push_back(occupancy_check(seed));
  out.push_back(bellman_check());
  out.push_back(dataset_roundtrip_check(seed));
  return out;
}

}  // namespace hoil
