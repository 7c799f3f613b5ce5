#include "hoil/rejection.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace hoil {

void RejectionConfig::validate() const {
  if (!(target_coverage > 0.0 && target_coverage <= 1.0)) throw std::invalid_argument("coverage target must lie in (0,1]");
  if (!(penalty_weight >= 0.0)) throw std::invalid_argument("penalty weight must be >= 0");
}

CollapsedCoverage::CollapsedCoverage(double coverage)
    : std::runtime_error("rejection head collapsed: coverage " + std::to_string(coverage)), coverage_(coverage) {}

double empirical_coverage(const Eigen::VectorXd& g_outputs) {
  if (g_outputs.size() == 0) throw std::invalid_argument("coverage of an empty batch");
  return g_outputs.mean();
}

double empirical_coverage(const RejectionHead& g, const Eigen::MatrixXd& features) {
  return empirical_coverage(g.outputs(features));
}

namespace {

struct Evaluated {
  Eigen::MatrixXd d_raw;
  Eigen::MatrixXd g_raw;
  Approximator::Cache d_cache;
  Approximator::Cache g_cache;
  Eigen::VectorXd g_out;
  Eigen::VectorXd loss;      // l_i
  Eigen::VectorXd d_logit;   // d l_i / d z_i
  double coverage = 0.0;
  double risk = 0.0;
};

Evaluated evaluate(const Discriminator& d, const RejectionHead& g, const Eigen::MatrixXd& features,
                   const Eigen::VectorXd& targets, const Eigen::VectorXd& weights) {
  const Eigen::Index m = features.cols();
  if (m == 0) throw std::invalid_argument("selective risk of an empty batch");
  if (targets.size() != m || weights.size() != m) throw std::invalid_argument("one target and weight per sample");
  Evaluated e;
  e.d_raw = d.net().forward_raw(features, e.d_cache);
  e.g_raw = g.net().forward_raw(features, e.g_cache);
  e.g_out = e.g_raw.row(0).transpose().unaryExpr([](double z) { return sigmoid(z); });
  e.loss.resize(m);
  e.d_logit.resize(m);
  double covered = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const BceTerm t = bce_term(e.d_raw(0, i), targets[i]);
    e.loss[i] = weights[i] * t.loss;
    e.d_logit[i] = weights[i] * t.d_logit;
    covered += e.loss[i] * e.g_out[i];
  }
  const double g_sum = e.g_out.sum();
  e.coverage = g_sum / static_cast<double>(m);
  if (!(e.coverage > kMinCoverage)) throw CollapsedCoverage(e.coverage);
  e.risk = covered / g_sum;
  if (!std::isfinite(e.risk)) {
    for (Eigen::Index i = 0; i < m; ++i) {
      if (!std::isfinite(e.loss[i])) throw NonFiniteLoss("non-finite selective risk", static_cast<long>(i));
    }
    throw NonFiniteLoss("non-finite selective risk", -1);
  }
  return e;
}

}  // namespace

double selective_risk(const Discriminator& d, const RejectionHead& g, const Eigen::MatrixXd& features,
                      const Eigen::VectorXd& targets, const Eigen::VectorXd& weights) {
  return evaluate(d, g, features, targets, weights).risk;
}

RejectionLossResult rejection_loss(const Discriminator& d, const RejectionHead& g, const Eigen::MatrixXd& features,
                                   const Eigen::VectorXd& targets, const Eigen::VectorXd& weights,
                                   const RejectionConfig& cfg) {
  cfg.validate();
  const Evaluated e = evaluate(d, g, features, targets, weights);
  const Eigen::Index m = features.cols();
  const double g_sum = e.g_out.sum();
  const double gap = std::max(0.0, cfg.target_coverage - e.coverage);

  RejectionLossResult r;
  r.selective_risk = e.risk;
  r.coverage = e.coverage;
  r.penalty = cfg.penalty_weight * gap * gap;
  r.total = r.selective_risk + r.penalty;

  Eigen::MatrixXd dz_d(1, m);
  Eigen::MatrixXd dz_g(1, m);
  const double hinge_slope = -2.0 * cfg.penalty_weight * gap / static_cast<double>(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    dz_d(0, i) = e.g_out[i] * e.d_logit[i] / g_sum;
    const double d_g = (e.loss[i] - e.risk) / g_sum + hinge_slope;
    dz_g(0, i) = d_g * e.g_out[i] * (1.0 - e.g_out[i]);
  }
  r.grad_d = d.net().backward(e.d_cache, dz_d);
  r.grad_g = g.net().backward(e.g_cache, dz_g);
  return r;
}

int indicator(double v) { return v > 0.5 ? 1 : -1; }

int binarize(double g_output) { return g_output > kRejectionThreshold ? 1 : 0; }

TernaryLabel combined_label_from_outputs(double d_output, double g_output) {
  const int ind = indicator(1.0 - d_output);
  const int product = ind * binarize(g_output);
  if (product == 1) return TernaryLabel::LatentDemo;
  if (product == 0 && ind == 1) return TernaryLabel::ObservedDemo;
  return TernaryLabel::NonExpert;
}

TernaryLabel combined_label(const Discriminator& d, const RejectionHead& g, const Instance& x) {
  return combined_label_from_outputs(d(x), g(x));
}

std::vector<TernaryLabel> label_all_pairs(const Discriminator& d, const RejectionHead& g, const DualObsEnv& env) {
  const int S = env.state_count();
  const int A = env.action_count();
  Eigen::MatrixXd features(d.obs_dim() + A, static_cast<Eigen::Index>(S) * A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) features.col(s * A + a) = obs_action_features(env.observe(d.space(), s), a, A);
  }
  const Eigen::VectorXd dv = d.outputs(features);
  const Eigen::VectorXd gv = g.outputs(features);
  std::vector<TernaryLabel> out(static_cast<std::size_t>(S) * A);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = combined_label_from_outputs(dv[static_cast<Eigen::Index>(i)], gv[static_cast<Eigen::Index>(i)]);
  }
  return out;
}

double balanced_accuracy(const std::vector<TernaryLabel>& predicted, const std::vector<TernaryLabel>& truth) {
  if (predicted.size() != truth.size() || truth.empty()) throw std::invalid_argument("label vectors must match");
  std::array<int, 3> hits{};
  std::array<int, 3> totals{};
  const auto slot = [](TernaryLabel l) { return static_cast<int>(l) + 1; };
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++totals[slot(truth[i])];
    if (predicted[i] == truth[i]) ++hits[slot(truth[i])];
  }
  double sum = 0.0;
  int classes = 0;
  for (int k = 0; k < 3; ++k) {
    if (totals[k] == 0) continue;
    sum += static_cast<double>(hits[k]) / totals[k];
    ++classes;
  }
  return sum / classes;
}

Eigen::MatrixXd sample_columns(const Eigen::MatrixXd& m, int n, Rng& rng) {
  if (m.cols() == 0) throw std::invalid_argument("cannot sample from an empty set");
  std::uniform_int_distribution<Eigen::Index> pick(0, m.cols() - 1);
  Eigen::MatrixXd out(m.rows(), n);
  for (int j = 0; j < n; ++j) out.col(j) = m.col(pick(rng));
  return out;
}

JointTrainStats train_joint(Discriminator& d, RejectionHead& g, const Eigen::MatrixXd& positives,
                            const Eigen::MatrixXd& negatives, const JointTrainConfig& cfg, Rng& rng) {
  cfg.rejection.validate();
  AdamConfig adam = cfg.adam;
  adam.total_steps = std::max<long>(cfg.steps, 1);
  Adam opt_d(d.net().parameter_count(), adam);
  Adam opt_g(g.net().parameter_count(), adam);
  JointTrainStats stats;
  for (int step = 0; step < cfg.steps; ++step) {
    const Eigen::MatrixXd pos = sample_columns(positives, cfg.batch_per_side, rng);
    const Eigen::MatrixXd neg = sample_columns(negatives, cfg.batch_per_side, rng);
    const ModelGrad dg = gail_loss(d, pos, neg);
    opt_d.step(d.net(), dg.gradient);
    stats.last_gail_loss = dg.value;

    const RoleBatch b = role_batch(pos, neg);
    const Eigen::VectorXd unit = Eigen::VectorXd::Ones(b.features.cols());
    const RejectionLossResult rl = rejection_loss(d, g, b.features, b.targets, unit, cfg.rejection);
    opt_g.step(g.net(), rl.grad_g);
    stats.last_rejection_loss = rl.total;
    stats.last_coverage = rl.coverage;
  }
  return stats;
}

}  // namespace hoil
