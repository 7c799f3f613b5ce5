#include "hoil/density.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hoil {

PairModel::PairModel(Approximator net, Space space, int obs_dim, int action_count)
    : net_(std::move(net)), space_(space), obs_dim_(obs_dim), actions_(action_count) {
  if (net_.head() != Head::Sigmoid || net_.input_dim() != obs_dim + action_count) {
    throw std::invalid_argument("pair model needs a sigmoid head over obs_dim + action_count inputs");
  }
}

PairModel PairModel::create(Space space, int obs_dim, int action_count, const std::vector<int>& hidden, Rng& rng) {
  std::vector<int> sizes{obs_dim + action_count};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return PairModel(Approximator::orthogonal(sizes, Head::Sigmoid, rng), space, obs_dim, action_count);
}

double PairModel::operator()(std::span<const double> obs, int action) const {
  const Eigen::VectorXd x = obs_action_features(obs, action, actions_);
  return net_.forward(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())))[0];
}

double PairModel::operator()(const Instance& x) const {
  if (x.space != space_) throw std::invalid_argument("instance space does not match the model");
  return (*this)(x.obs, x.action);
}

Eigen::MatrixXd PairModel::features(const std::vector<Instance>& batch) const {
  Eigen::MatrixXd out(obs_dim_ + actions_, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t j = 0; j < batch.size(); ++j) {
    if (batch[j].space != space_) throw std::invalid_argument("instance space does not match the model");
    out.col(static_cast<Eigen::Index>(j)) = obs_action_features(batch[j].obs, batch[j].action, actions_);
  }
  return out;
}

Eigen::VectorXd PairModel::outputs(const Eigen::MatrixXd& features) const {
  return net_.forward(features).row(0).transpose();
}

LossFn weighted_bce_sum(Eigen::VectorXd targets, Eigen::VectorXd weights) {
  return [targets = std::move(targets), weights = std::move(weights)](const Eigen::MatrixXd& raw) {
    const Eigen::Index n = raw.cols();
    LossResult r;
    r.per_sample.resize(n);
    r.d_raw.resize(1, n);
    r.value = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const BceTerm t = bce_term(raw(0, i), targets[i]);
      r.per_sample[i] = t.loss;
      r.value += weights[i] * t.loss;
      r.d_raw(0, i) = weights[i] * t.d_logit;
    }
    return r;
  };
}

RoleBatch role_batch(const Eigen::MatrixXd& positives, const Eigen::MatrixXd& negatives,
                     const Eigen::VectorXd* negative_alpha) {
  if (positives.cols() == 0 || negatives.cols() == 0) throw std::invalid_argument("both batches must be nonempty");
  if (positives.rows() != negatives.rows()) throw std::invalid_argument("feature dimensions differ");
  if (negative_alpha && negative_alpha->size() != negatives.cols()) {
    throw std::invalid_argument("one importance weight per negative instance required");
  }
  const Eigen::Index np = positives.cols();
  const Eigen::Index nn = negatives.cols();
  RoleBatch b;
  b.features.resize(positives.rows(), np + nn);
  b.features << positives, negatives;
  b.targets.resize(np + nn);
  b.weights.resize(np + nn);
  const double wp = 1.0 / static_cast<double>(np);
  const double wn = 1.0 / static_cast<double>(nn);
  for (Eigen::Index i = 0; i < np; ++i) {
    b.targets[i] = kLearnerSide;
    b.weights[i] = wp;
  }
  for (Eigen::Index i = 0; i < nn; ++i) {
    b.targets[np + i] = kDemoSide;
    b.weights[np + i] = negative_alpha ? (*negative_alpha)[i] * wn : wn;
  }
  return b;
}

ModelGrad gail_loss(const Discriminator& d, const Eigen::MatrixXd& positives, const Eigen::MatrixXd& negatives) {
  const RoleBatch b = role_batch(positives, negatives);
  const GradResult g = grad(d.net(), weighted_bce_sum(b.targets, b.weights), b.features);
  return {g.value, g.gradient};
}

ModelGrad weighted_d2_loss(const Discriminator& d2, const Eigen::MatrixXd& positives_pi2,
                           const Eigen::MatrixXd& negatives_pi1, const Eigen::VectorXd& alpha) {
  const RoleBatch b = role_batch(positives_pi2, negatives_pi1, &alpha);
  const GradResult g = grad(d2.net(), weighted_bce_sum(b.targets, b.weights), b.features);
  return {g.value, g.gradient};
}

double optimal_discriminator(double rho_1, double rho_e) {
  if (rho_1 < 0.0 || rho_e < 0.0) throw std::invalid_argument("occupancies must be nonnegative");
  if (rho_1 + rho_e <= 0.0) throw std::invalid_argument("point lies outside both supports");
  return rho_1 / (rho_1 + rho_e);
}

double importance_weight_from_output(double d) {
  const double dc = clamp_prob(d);
  return std::clamp((1.0 - dc) / dc, kAlphaMin, kAlphaMax);
}

double importance_weight(const Discriminator& d1, const Instance& x_e) {
  if (x_e.space != Space::Expert) throw std::invalid_argument("importance weight reads O_E instances");
  return importance_weight_from_output(d1(x_e));
}

Eigen::VectorXd importance_weights(const Discriminator& d1, const Eigen::MatrixXd& features_e) {
  return d1.outputs(features_e).unaryExpr([](double d) { return importance_weight_from_output(d); });
}

double pseudo_reward_from_output(double d) { return -std::log(clamp_prob(d)); }

double pseudo_reward(const Discriminator& d2, const Instance& x_l) {
  if (x_l.space != Space::Learner) throw std::invalid_argument("pseudo reward reads O_L instances");
  return pseudo_reward_from_output(d2(x_l));
}

std::vector<double> minmax_normalize(const std::vector<double>& raw) {
  if (raw.empty()) return {};
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  const double range = *hi - *lo;
  std::vector<double> out(raw.size(), 0.0);
  if (range <= 0.0) return out;
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - *lo) / range;
  return out;
}

std::vector<double> RunningMinMax::normalize(const std::vector<double>& raw) {
  for (double r : raw) {
    if (!std::isfinite(r)) throw std::invalid_argument("non-finite raw reward");
    lo_ = std::min(lo_, r);
    hi_ = std::max(hi_, r);
  }
  std::vector<double> out(raw.size(), 0.0);
  const double range = hi_ - lo_;
  if (range <= 0.0) return out;
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - lo_) / range;
  return out;
}

std::vector<double> MixtureSpec::mixture() const {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0,1)");
  if (expert.size() != non_expert.size()) throw std::invalid_argument("mixture components need a shared support");
  std::vector<double> out(expert.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = delta * expert[i] + (1.0 - delta) * non_expert[i];
  return out;
}

}  // namespace hoil
