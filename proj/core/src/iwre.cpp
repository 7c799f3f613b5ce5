#include "hoil/iwre.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hoil {

QueryBudget::QueryBudget(long max_queries) : max_(max_queries < 0 ? kUnlimited : max_queries) {}

QueryBudget QueryBudget::from_ratio(double ratio, long total_steps) {
  if (std::isinf(ratio) && ratio > 0) return QueryBudget(kUnlimited);
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw std::invalid_argument("budget ratio must lie in [0,1] or be unlimited");
  return QueryBudget(static_cast<long>(std::floor(ratio * static_cast<double>(total_steps))));
}

long QueryBudget::remaining() const {
  return unlimited() ? std::numeric_limits<long>::max() : max_ - used_;
}

void QueryBudget::consume() {
  if (exhausted()) throw std::logic_error("query budget exceeded");
  ++used_;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("replay buffer capacity must be positive");
}

void ReplayBuffer::push(CalibrationRecord record) {
  if (records_.size() >= capacity_) records_.pop_front();
  records_.push_back(std::move(record));
}

void IwreConfig::validate() const {
  rejection.validate();
  if (hidden.empty()) throw std::invalid_argument("at least one hidden layer required");
  if (learning_rate <= 0.0) throw std::invalid_argument("learning rate must be positive");
  if (n_evolving < 1 || batch_size < 2 || update_ratio < 1 || steps_per_iteration < 1 || total_steps < 1 ||
      discriminator_passes < 1) {
    throw std::invalid_argument("training counts must be positive");
  }
  if (eval_interval < 1 || eval_episodes < 1) throw std::invalid_argument("evaluation counts must be positive");
  if (buffer_capacity < 1 || calibration_epochs < 0) throw std::invalid_argument("invalid calibration settings");
}

namespace {

Eigen::MatrixXd pair_features(const std::vector<DualInstance>& steps, Space space, int action_count) {
  if (steps.empty()) return {};
  const auto& first = space == Space::Expert ? steps.front().obs_e : steps.front().obs_l;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(first.size()) + action_count, static_cast<Eigen::Index>(steps.size()));
  for (std::size_t j = 0; j < steps.size(); ++j) {
    const auto& obs = space == Space::Expert ? steps[j].obs_e : steps[j].obs_l;
    if (obs.size() != first.size()) throw std::invalid_argument("step lacks an observation in the requested space");
    out.col(static_cast<Eigen::Index>(j)) = obs_action_features(obs, steps[j].action, action_count);
  }
  return out;
}

Eigen::MatrixXd obs_columns(const std::vector<DualInstance>& steps, Space space) {
  std::vector<std::vector<double>> rows;
  rows.reserve(steps.size());
  for (const auto& s : steps) rows.push_back(space == Space::Expert ? s.obs_e : s.obs_l);
  return stack_columns(rows);
}

std::vector<int> actions_of(const std::vector<DualInstance>& steps) {
  std::vector<int> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.action);
  return out;
}

long ceil_div(long a, long b) { return (a + b - 1) / b; }

std::vector<Eigen::Index> sample_indices(Eigen::Index n, int count, Rng& rng) {
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  std::vector<Eigen::Index> out(static_cast<std::size_t>(count));
  for (auto& i : out) i = pick(rng);
  return out;
}

Eigen::MatrixXd gather(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(idx[j]);
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out[static_cast<Eigen::Index>(j)] = v[idx[j]];
  return out;
}

constexpr long kUnboundedSteps = std::numeric_limits<long>::max() / 2;

AdamConfig loop_adam(double lr) {
  AdamConfig a;
  a.learning_rate = lr;
  a.total_steps = kUnboundedSteps;
  a.linear_decay = false;
  return a;
}

}  // namespace

PretrainOutput pretrain_on(const DualObsEnv& env, std::vector<Trajectory> evolving,
                           const std::vector<Trajectory>& demos_e, const IwreConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (demos_e.empty()) throw std::invalid_argument("pretraining needs expert demonstrations");
  const auto demo_steps = flatten_steps(demos_e);
  const auto evo_steps = flatten_steps(evolving);
  if (demo_steps.empty() || evo_steps.empty()) throw std::invalid_argument("pretraining data is empty");
  const int A = env.action_count();
  const Eigen::MatrixXd positives = pair_features(evo_steps, Space::Expert, A);
  const Eigen::MatrixXd negatives = pair_features(demo_steps, Space::Expert, A);

  Rng init_rng(derive_seed(seed, streams::kPretrainInit));
  PretrainOutput out{std::move(evolving),
                     PairModel::create(Space::Expert, env.obs_dim(Space::Expert), A, cfg.hidden, init_rng),
                     PairModel::create(Space::Expert, env.obs_dim(Space::Expert), A, cfg.hidden, init_rng)};

  JointTrainConfig jc;
  jc.rejection = cfg.rejection;
  jc.batch_per_side = std::max(1, cfg.batch_size / 2);
  const long data = positives.cols() + negatives.cols();
  jc.steps = static_cast<int>(std::max<long>(cfg.pretrain_epochs * ceil_div(data, cfg.batch_size), cfg.pretrain_min_steps));
  jc.adam.learning_rate = cfg.learning_rate;
  Rng batch_rng(derive_seed(seed, streams::kPretrainBatches));
  train_joint(out.d1, out.g1, positives, negatives, jc, batch_rng);
  return out;
}

PretrainOutput pretrain(const DualObsEnv& env, const Policy& pi_1, const std::vector<Trajectory>& demos_e,
                        const IwreConfig& cfg, std::uint64_t seed) {
  if (demos_e.empty()) throw std::invalid_argument("pretraining needs expert demonstrations");
  Rng rng(derive_seed(seed, streams::kEvolving));
  return pretrain_on(env, collect_evolving_data(env, pi_1, cfg.n_evolving, rng), demos_e, cfg, seed);
}

bool query_gate(double d2_output, double g2_output) {
  return indicator(d2_output) == 1 && binarize(g2_output) == 1;
}

bool should_query(const Discriminator& d2, const RejectionHead& g2, const Instance& x_l, const QueryBudget& budget) {
  return !budget.exhausted() && query_gate(d2(x_l), g2(x_l));
}

Instance oc_query(const DualObsEnv& env, const Instance& x_l, QueryBudget& budget) {
  if (x_l.space != Space::Learner) throw std::invalid_argument("queries start from O_L instances");
  budget.consume();
  return Instance{env.observe(Space::Expert, x_l.latent_state), x_l.action, Space::Expert, x_l.latent_state, x_l.t};
}

CalibrationTargets calibration_targets(TernaryLabel teacher) {
  switch (teacher) {
    case TernaryLabel::LatentDemo: return {kDemoSide, 1.0};
    case TernaryLabel::ObservedDemo: return {kDemoSide, 0.0};
    case TernaryLabel::NonExpert: return {kLearnerSide, 1.0};
  }
  throw std::invalid_argument("unknown teacher label");
}

void calibrate_on_buffer(Discriminator& d2, RejectionHead& g2, const ReplayBuffer& buffer,
                         const CalibrationOptimizers& opt, Rng& rng) {
  if (buffer.size() == 0 || opt.epochs == 0) return;
  Adam local_d(d2.net().parameter_count(), loop_adam(opt.learning_rate));
  Adam local_g(g2.net().parameter_count(), loop_adam(opt.learning_rate));
  Adam& od = opt.d2 ? *opt.d2 : local_d;
  Adam& og = opt.g2 ? *opt.g2 : local_g;

  const auto n = static_cast<Eigen::Index>(buffer.size());
  Eigen::MatrixXd features(d2.obs_dim() + d2.action_count(), n);
  Eigen::VectorXd d_targets(n);
  Eigen::VectorXd g_targets(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& rec = buffer.records()[static_cast<std::size_t>(i)];
    features.col(i) = obs_action_features(rec.x_l.obs, rec.x_l.action, d2.action_count());
    const auto t = calibration_targets(rec.teacher);
    d_targets[i] = t.d_target;
    g_targets[i] = t.g_target;
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  const int bs = std::max(1, opt.batch_size);
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(bs)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(bs));
      const std::vector<Eigen::Index> idx(order.begin() + static_cast<long>(start), order.begin() + static_cast<long>(stop));
      const Eigen::MatrixXd x = gather(features, idx);
      const Eigen::VectorXd w = Eigen::VectorXd::Constant(x.cols(), 1.0 / static_cast<double>(x.cols()));
      od.step(d2.net(), grad(d2.net(), weighted_bce_sum(gather(d_targets, idx), w), x).gradient, opt.learning_rate);
      og.step(g2.net(), grad(g2.net(), weighted_bce_sum(gather(g_targets, idx), w), x).gradient, opt.learning_rate);
    }
  }
}

bool calibrate_from_teacher(Discriminator& d2, RejectionHead& g2, const Instance& x_l, TernaryLabel teacher,
                            ReplayBuffer& buffer, const CalibrationOptimizers& opt, Rng& rng) {
  buffer.push({x_l, teacher});
  if (!buffer.full()) return false;
  calibrate_on_buffer(d2, g2, buffer, opt, rng);
  buffer.clear();
  return true;
}

PolicyBatch prepare_policy_batch(const NeuralPolicy& pi, const std::vector<DualInstance>& steps,
                                 const std::vector<double>& rewards, double gamma) {
  if (steps.size() != rewards.size()) throw std::invalid_argument("one reward per step required");
  if (steps.empty()) throw std::invalid_argument("empty policy batch");
  PolicyBatch b;
  b.obs = obs_columns(steps, pi.space());
  b.actions = actions_of(steps);
  const auto n = static_cast<Eigen::Index>(steps.size());
  b.returns.resize(n);
  double running = 0.0;
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    const bool episode_ends = i + 1 == n || steps[static_cast<std::size_t>(i + 1)].t == 0;
    if (episode_ends) running = 0.0;
    running = rewards[static_cast<std::size_t>(i)] + gamma * running;
    b.returns[i] = running;
  }
  const Eigen::MatrixXd raw = pi.net().forward_raw(b.obs);
  const int A = pi.action_count();
  const Eigen::MatrixXd probs = apply_head(Head::Softmax, raw.topRows(A));
  b.old_log_prob.resize(n);
  b.advantages.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    b.old_log_prob[i] = std::log(std::max(probs(b.actions[static_cast<std::size_t>(i)], i), 1e-300));
    b.advantages[i] = b.returns[i] - raw(A, i);
    if (!std::isfinite(b.advantages[i])) throw NonFiniteLoss("non-finite advantage", static_cast<long>(i));
  }
  return b;
}

PolicyBatch slice(const PolicyBatch& b, const std::vector<Eigen::Index>& idx) {
  PolicyBatch out;
  out.obs = gather(b.obs, idx);
  out.old_log_prob = gather(b.old_log_prob, idx);
  out.returns = gather(b.returns, idx);
  out.advantages = gather(b.advantages, idx);
  out.actions.reserve(idx.size());
  for (auto i : idx) out.actions.push_back(b.actions[static_cast<std::size_t>(i)]);
  return out;
}

LossFn ppo_loss(const PolicyBatch& batch, int action_count, const PpoConfig& cfg) {
  return [&batch, action_count, cfg](const Eigen::MatrixXd& raw) {
    const Eigen::Index n = raw.cols();
    const int A = action_count;
    const Eigen::MatrixXd probs = apply_head(Head::Softmax, raw.topRows(A));
    LossResult r;
    r.per_sample.resize(n);
    r.d_raw = Eigen::MatrixXd::Zero(A + 1, n);
    const double inv_n = 1.0 / static_cast<double>(n);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int a = batch.actions[static_cast<std::size_t>(i)];
      const double adv = batch.advantages[i];
      const double logp = std::log(std::max(probs(a, i), 1e-300));
      const double ratio = std::exp(logp - batch.old_log_prob[i]);
      const double clipped = std::clamp(ratio, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio);
      const bool unclipped_active = ratio * adv <= clipped * adv;
      const double surrogate = unclipped_active ? ratio * adv : clipped * adv;

      double entropy = 0.0;
      for (int k = 0; k < A; ++k) {
        const double p = probs(k, i);
        if (p > 0.0) entropy -= p * std::log(p);
      }
      const double v = raw(A, i);
      const double verr = v - batch.returns[i];
      r.per_sample[i] = -surrogate - cfg.entropy_coef * entropy + cfg.value_coef * verr * verr;
      total += r.per_sample[i];

      for (int k = 0; k < A; ++k) {
        const double p = probs(k, i);
        double d = 0.0;
        if (unclipped_active) d -= adv * ratio * ((k == a ? 1.0 : 0.0) - p);
        if (p > 0.0) d += cfg.entropy_coef * p * (std::log(p) + entropy);
        r.d_raw(k, i) = d * inv_n;
      }
      r.d_raw(A, i) = 2.0 * cfg.value_coef * verr * inv_n;
    }
    r.value = total * inv_n;
    return r;
  };
}

double policy_update(NeuralPolicy& pi, const PolicyBatch& batch, Adam& opt, const PpoConfig& cfg,
                     std::optional<double> learning_rate) {
  for (Eigen::Index i = 0; i < batch.advantages.size(); ++i) {
    if (!std::isfinite(batch.advantages[i])) throw NonFiniteLoss("non-finite advantage", static_cast<long>(i));
  }
  const GradResult g = grad(pi.net(), ppo_loss(batch, pi.action_count(), cfg), batch.obs);
  if (learning_rate) {
    opt.step(pi.net(), g.gradient, *learning_rate);
  } else {
    opt.step(pi.net(), g.gradient);
  }
  return g.value;
}

namespace {

/// Cross-entropy on the logits of a policy network; the value output gets no gradient.
LossFn policy_cross_entropy(std::vector<int> labels, int action_count) {
  return [labels = std::move(labels), action_count](const Eigen::MatrixXd& raw) {
    const Eigen::Index n = raw.cols();
    const auto inner = losses::categorical_cross_entropy(labels, Eigen::VectorXd::Ones(n));
    LossResult part = inner(raw.topRows(action_count));
    LossResult r;
    r.value = part.value;
    r.per_sample = std::move(part.per_sample);
    r.d_raw = Eigen::MatrixXd::Zero(raw.rows(), n);
    r.d_raw.topRows(action_count) = part.d_raw;
    return r;
  };
}

}  // namespace

void behavior_clone(NeuralPolicy& pi, const Eigen::MatrixXd& obs, const std::vector<int>& actions, int epochs,
                    int batch_size, double learning_rate, Rng& rng) {
  const auto n = static_cast<std::size_t>(obs.cols());
  if (n == 0 || actions.size() != n) throw std::invalid_argument("behavior cloning needs matching, nonempty data");
  if (epochs <= 0) return;
  const std::size_t bs = static_cast<std::size_t>(std::max(1, batch_size));
  const long per_epoch = ceil_div(static_cast<long>(n), static_cast<long>(bs));
  AdamConfig ac;
  ac.learning_rate = learning_rate;
  ac.total_steps = per_epoch * epochs;
  Adam opt(pi.net().parameter_count(), ac);
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t stop = std::min(n, start + bs);
      const std::vector<Eigen::Index> idx(order.begin() + static_cast<long>(start), order.begin() + static_cast<long>(stop));
      std::vector<int> labels;
      labels.reserve(idx.size());
      for (auto i : idx) labels.push_back(actions[static_cast<std::size_t>(i)]);
      opt.step(pi.net(), grad(pi.net(), policy_cross_entropy(std::move(labels), pi.action_count()), gather(obs, idx)).gradient);
    }
  }
}

EvalResult evaluate(const Policy& policy, const DualObsEnv& env, int n_episodes, Rng& rng) {
  if (n_episodes < 1) throw std::invalid_argument("n_episodes must be >= 1");
  EvalResult r;
  r.visited.assign(static_cast<std::size_t>(env.state_count()) * env.action_count(), false);
  std::vector<double> returns;
  returns.reserve(static_cast<std::size_t>(n_episodes));
  for (int e = 0; e < n_episodes; ++e) {
    const auto traj = rollout(env, policy, rng, false, ActionMode::Greedy);
    for (const auto& s : traj.steps) {
      r.visited[static_cast<std::size_t>(s.latent_state) * env.action_count() + s.action] = true;
    }
    returns.push_back(traj.episode_return);
  }
  r.mean_return = std::accumulate(returns.begin(), returns.end(), 0.0) / n_episodes;
  double ss = 0.0;
  for (double x : returns) ss += (x - r.mean_return) * (x - r.mean_return);
  r.std_return = std::sqrt(ss / n_episodes);
  return r;
}

double visit_fraction(const std::vector<bool>& visited, const SupportPartition& truth, TernaryLabel label) {
  if (visited.size() != truth.labels.size()) throw std::invalid_argument("visit mask does not match the partition");
  long total = 0;
  long hit = 0;
  for (std::size_t i = 0; i < visited.size(); ++i) {
    if (truth.labels[i] != label) continue;
    ++total;
    if (visited[i]) ++hit;
  }
  if (total == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(hit) / static_cast<double>(total);
}

TrainResult train(const TrainInputs& in, const IwreConfig& cfg, QueryBudget budget, std::uint64_t seed) {
  cfg.validate();
  if (!in.env) throw std::invalid_argument("training needs an environment");
  const DualObsEnv& env = *in.env;
  const bool adversarial = in.source != RewardSource::TrueReward;
  if (in.source == RewardSource::WeightedDiscriminator && !in.pretrained) {
    throw std::invalid_argument("importance weighting needs pretrained (D_w1, g_1)");
  }
  const std::vector<Trajectory>* evolving = in.pretrained ? &in.pretrained->evolving : in.evolving;
  if (adversarial && (!evolving || evolving->empty())) throw std::invalid_argument("adversarial training needs evolving data");

  const int A = env.action_count();
  const int L = env.obs_dim(Space::Learner);
  Rng policy_rng(derive_seed(seed, streams::kPolicyInit));
  Rng rollout_rng(derive_seed(seed, streams::kRollouts));
  Rng batch_rng(derive_seed(seed, streams::kBatches));
  Rng eval_rng(derive_seed(seed, streams::kEval));
  Rng calib_rng(derive_seed(seed, streams::kCalibration));
  Rng bc_rng(derive_seed(seed, streams::kBc));
  Rng d2_rng(derive_seed(seed, streams::kD2Init));
  Rng g2_rng(derive_seed(seed, streams::kG2Init));

  TrainResult result{NeuralPolicy::create(L, A, Space::Learner, cfg.hidden, policy_rng), {}, std::nullopt, {}, {}, {}, 0};
  NeuralPolicy& pi = result.policy;

  const std::vector<DualInstance> evo_steps = evolving ? flatten_steps(*evolving) : std::vector<DualInstance>{};
  if (in.bc_init && !evo_steps.empty()) {
    behavior_clone(pi, obs_columns(evo_steps, Space::Learner), actions_of(evo_steps), cfg.bc_epochs, cfg.batch_size,
                   cfg.learning_rate, bc_rng);
  }

  const bool rejection_active = in.source == RewardSource::WeightedDiscriminator &&
                                (budget.unlimited() || budget.max_queries() > 0);
  Eigen::MatrixXd neg_pool;
  Eigen::VectorXd neg_alpha;
  if (adversarial) {
    result.d2 = PairModel::create(Space::Learner, L, A, cfg.hidden, d2_rng);
    neg_pool = pair_features(evo_steps, Space::Learner, A);
    if (in.source == RewardSource::WeightedDiscriminator) {
      neg_alpha = importance_weights(in.pretrained->d1, pair_features(evo_steps, Space::Expert, A));
    } else {
      neg_alpha = Eigen::VectorXd::Ones(neg_pool.cols());
    }
  }
  if (rejection_active) result.g2 = PairModel::create(Space::Learner, L, A, cfg.hidden, g2_rng);
  Discriminator& d2 = result.d2;

  Adam opt_pi(pi.net().parameter_count(), loop_adam(cfg.learning_rate));
  Adam opt_d2;
  Adam opt_g2;
  if (adversarial) opt_d2 = Adam(d2.net().parameter_count(), loop_adam(cfg.learning_rate));
  if (rejection_active) opt_g2 = Adam(result.g2->net().parameter_count(), loop_adam(cfg.learning_rate));

  const PpoConfig ppo{cfg.clip_ratio, cfg.entropy_coef, cfg.value_coef};
  const int half = std::max(1, cfg.batch_size / 2);
  RunningMinMax running_norm;
  ReplayBuffer buffer(cfg.buffer_capacity);
  double last_coverage = std::numeric_limits<double>::quiet_NaN();

  const auto collect = [&](int min_steps) {
    std::vector<DualInstance> steps;
    while (static_cast<int>(steps.size()) < min_steps) {
      auto traj = rollout(env, pi, rollout_rng, false);
      for (auto& s : traj.steps) steps.push_back(std::move(s));
    }
    return steps;
  };

  // One Eq. (9) step, optionally combined with the rejection loss; also steps g_2.
  const auto discriminator_step = [&](const Eigen::MatrixXd& pi2_features, double lr, bool with_rejection) {
    const auto pos_idx = sample_indices(pi2_features.cols(), half, batch_rng);
    const auto neg_idx = sample_indices(neg_pool.cols(), half, batch_rng);
    Eigen::VectorXd alpha = gather(neg_alpha, neg_idx);
    if (cfg.self_normalize_weights) alpha /= alpha.mean();
    const RoleBatch rb = role_batch(gather(pi2_features, pos_idx), gather(neg_pool, neg_idx), &alpha);
    Eigen::VectorXd grad_d = grad(d2.net(), weighted_bce_sum(rb.targets, rb.weights), rb.features).gradient;
    if (with_rejection) {
      // Per-sample risk weights: 1 for pi_2 data, alpha for pi_1 data.
      Eigen::VectorXd w = Eigen::VectorXd::Ones(rb.features.cols());
      w.tail(alpha.size()) = alpha;
      const RejectionLossResult rl = rejection_loss(d2, *result.g2, rb.features, rb.targets, w, cfg.rejection);
      grad_d += cfg.d2_rejection_weight * rl.grad_d;
      opt_g2.step(result.g2->net(), rl.grad_g, lr);
      last_coverage = rl.coverage;
    }
    opt_d2.step(d2.net(), grad_d, lr);
  };

  if (adversarial && cfg.d2_pretrain_epochs > 0) {
    const auto warm = collect(cfg.steps_per_iteration);
    const Eigen::MatrixXd warm_features = pair_features(warm, Space::Learner, A);
    const long steps = cfg.d2_pretrain_epochs * ceil_div(warm_features.cols() + neg_pool.cols(), cfg.batch_size);
    for (long k = 0; k < steps; ++k) discriminator_step(warm_features, cfg.learning_rate, false);
  }

  long steps_done = 0;
  long next_eval = 0;
  const auto record = [&] {
    const EvalResult er = evaluate(pi, env, cfg.eval_episodes, eval_rng);
    MetricRecord m;
    m.step = steps_done;
    m.mean_return = er.mean_return;
    m.std_return = er.std_return;
    m.queries_used = budget.used();
    m.coverage = rejection_active ? last_coverage : std::numeric_limits<double>::quiet_NaN();
    if (in.truth) m.h_visit_fraction = visit_fraction(er.visited, *in.truth, TernaryLabel::LatentDemo);
    result.metrics.push_back(m);
    if (in.on_record) in.on_record(m, pi);
    while (next_eval <= steps_done) next_eval += cfg.eval_interval;
  };
  record();

  while (steps_done < cfg.total_steps) {
    const double progress = static_cast<double>(steps_done) / static_cast<double>(cfg.total_steps);
    const double lr = cfg.learning_rate * std::max(0.0, 1.0 - progress);
    std::vector<DualInstance> steps = collect(cfg.steps_per_iteration);
    steps_done += static_cast<long>(steps.size());

    const Eigen::MatrixXd features = pair_features(steps, Space::Learner, A);
    std::vector<double> raw(steps.size());
    if (adversarial) {
      const Eigen::VectorXd d = d2.outputs(features);
      for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = pseudo_reward_from_output(d[static_cast<Eigen::Index>(i)]);
    } else {
      for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = steps[i].reward;
    }
    result.reward_trace.push_back(std::accumulate(raw.begin(), raw.end(), 0.0) / static_cast<double>(raw.size()));
    const std::vector<double> rewards = cfg.running_reward_norm ? running_norm.normalize(raw) : minmax_normalize(raw);

    const PolicyBatch pb = prepare_policy_batch(pi, steps, rewards, env.gamma());
    const auto n = static_cast<Eigen::Index>(steps.size());
    const long minibatches = ceil_div(n, cfg.batch_size);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < cfg.update_ratio; ++epoch) {
      std::shuffle(order.begin(), order.end(), batch_rng);
      for (long m = 0; m < minibatches; ++m) {
        const auto lo = order.begin() + m * n / minibatches;
        const auto hi = order.begin() + (m + 1) * n / minibatches;
        policy_update(pi, slice(pb, std::vector<Eigen::Index>(lo, hi)), opt_pi, ppo, lr);
      }
    }

    if (adversarial) {
      const long d_steps = minibatches * cfg.discriminator_passes;
      for (long m = 0; m < d_steps; ++m) discriminator_step(features, lr, rejection_active);
    }

    if (in.truth) {
      result.query_stats.visited += static_cast<long>(steps.size());
      for (const auto& s : steps) {
        if (in.truth->at(s.latent_state, s.action) == TernaryLabel::LatentDemo) ++result.query_stats.visited_true_h;
      }
    }

    if (rejection_active) {
      RejectionHead& g2 = *result.g2;
      const Eigen::VectorXd dv = d2.outputs(features);
      const Eigen::VectorXd gv = g2.outputs(features);
      std::vector<std::size_t> candidates;
      for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        if (query_gate(dv[k], gv[k])) candidates.push_back(i);
      }
      long allowance = std::numeric_limits<long>::max();
      if (!budget.unlimited()) {
        const double share = std::min(1.0, static_cast<double>(steps_done) / static_cast<double>(cfg.total_steps));
        const auto spread = static_cast<long>(std::floor(share * static_cast<double>(budget.max_queries())));
        allowance = std::max(0L, std::min(spread - budget.used(), budget.remaining()));
        std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
          return gv[static_cast<Eigen::Index>(a)] > gv[static_cast<Eigen::Index>(b)];
        });
      }
      const CalibrationOptimizers copt{&opt_d2, &opt_g2, lr, cfg.batch_size, cfg.calibration_epochs};
      long taken = 0;
      for (std::size_t i : candidates) {
        if (taken >= allowance || budget.exhausted()) break;
        const Instance x_l = steps[i].view(Space::Learner);
        const Instance x_e = oc_query(env, x_l, budget);
        ++taken;
        const TernaryLabel teacher = combined_label(in.pretrained->d1, in.pretrained->g1, x_e);
        if (in.truth) {
          ++result.query_stats.queried;
          if (in.truth->at(x_l.latent_state, x_l.action) == TernaryLabel::LatentDemo) ++result.query_stats.queried_true_h;
        }
        if (cfg.queried_h_into_weighted_set && teacher == TernaryLabel::LatentDemo) {
          neg_pool.conservativeResize(Eigen::NoChange, neg_pool.cols() + 1);
          neg_pool.col(neg_pool.cols() - 1) = features.col(static_cast<Eigen::Index>(i));
          neg_alpha.conservativeResize(neg_alpha.size() + 1);
          neg_alpha[neg_alpha.size() - 1] = 1.0;
        }
        if (calibrate_from_teacher(d2, g2, x_l, teacher, buffer, copt, calib_rng)) ++result.query_stats.calibrations;
      }
      if (!budget.unlimited() && budget.used() > budget.max_queries()) throw std::logic_error("query budget breached");
    }

    if (steps_done >= next_eval || steps_done >= cfg.total_steps) record();
    if (in.on_iteration) in.on_iteration(steps_done, result);
  }
  result.queries_used = budget.used();
  return result;
}

}  // namespace hoil
