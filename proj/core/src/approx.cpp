#include "hoil/approx.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace hoil {

const char* head_name(Head h) {
  switch (h) {
    case Head::Sigmoid: return "sigmoid";
    case Head::Softmax: return "softmax";
    case Head::Linear: return "linear";
  }
  return "?";
}

Head parse_head(const std::string& name) {
  if (name == "sigmoid") return Head::Sigmoid;
  if (name == "softmax") return Head::Softmax;
  if (name == "linear") return Head::Linear;
  throw std::invalid_argument("unknown output head: " + name);
}

Approximator::Approximator(std::vector<int> layer_sizes, Head head)
    : sizes_(std::move(layer_sizes)), head_(head) {
  if (sizes_.size() < 2) throw std::invalid_argument("approximator needs at least input and output sizes");
  for (int n : sizes_) {
    if (n < 1) throw std::invalid_argument("layer sizes must be positive");
  }
  if (head_ == Head::Sigmoid && sizes_.back() != 1) {
    throw std::invalid_argument("sigmoid head is scalar");
  }
  Eigen::Index total = 0;
  for (int l = 0; l < layer_count(); ++l) {
    offsets_.push_back(total);
    total += static_cast<Eigen::Index>(sizes_[l] + 1) * sizes_[l + 1];
  }
  params_ = Eigen::VectorXd::Zero(total);
}

Approximator Approximator::orthogonal(std::vector<int> layer_sizes, Head head, Rng& rng) {
  Approximator f(std::move(layer_sizes), head);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int l = 0; l < f.layer_count(); ++l) {
    const int rows = f.sizes_[l + 1];
    const int cols = f.sizes_[l];
    const int tall = std::max(rows, cols);
    const int wide = std::min(rows, cols);
    Eigen::MatrixXd a(tall, wide);
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = normal(rng);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(tall, wide);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(wide).triangularView<Eigen::Upper>();
    for (int j = 0; j < wide; ++j) {
      if (r(j, j) < 0) q.col(j) *= -1.0;
    }
    Eigen::Map<Eigen::MatrixXd> w(f.params_.data() + f.offsets_[l], rows, cols);
    if (rows >= cols) {
      w = q;
    } else {
      w = q.transpose();
    }
  }
  return f;
}

Eigen::MatrixXd Approximator::forward_raw(const Eigen::MatrixXd& x) const {
  Cache cache;
  return forward_raw(x, cache);
}

Eigen::MatrixXd Approximator::forward_raw(const Eigen::MatrixXd& x, Cache& cache) const {
  if (x.rows() != input_dim()) throw std::invalid_argument("input dimension mismatch");
  cache.activations.clear();
  cache.activations.push_back(x);
  Eigen::MatrixXd h = x;
  for (int l = 0; l < layer_count(); ++l) {
    const int rows = sizes_[l + 1];
    const int cols = sizes_[l];
    Eigen::Map<const Eigen::MatrixXd> w(params_.data() + offsets_[l], rows, cols);
    Eigen::Map<const Eigen::VectorXd> b(params_.data() + offsets_[l] + Eigen::Index(rows) * cols, rows);
    Eigen::MatrixXd z = w * h;
    z.colwise() += b;
    if (l + 1 < layer_count()) {
      h = z.array().tanh().matrix();
      cache.activations.push_back(h);
    } else {
      return z;
    }
  }
  return h;
}

Eigen::MatrixXd apply_head(Head head, const Eigen::MatrixXd& raw) {
  switch (head) {
    case Head::Sigmoid:
      return raw.unaryExpr([](double z) { return sigmoid(z); });
    case Head::Softmax: {
      Eigen::MatrixXd out(raw.rows(), raw.cols());
      for (Eigen::Index j = 0; j < raw.cols(); ++j) {
        const double m = raw.col(j).maxCoeff();
        Eigen::VectorXd e = (raw.col(j).array() - m).exp().matrix();
        out.col(j) = e / e.sum();
      }
      return out;
    }
    case Head::Linear:
      return raw;
  }
  return raw;
}

Eigen::MatrixXd Approximator::forward(const Eigen::MatrixXd& x) const { return apply_head(head_, forward_raw(x)); }

Eigen::VectorXd Approximator::forward(std::span<const double> x) const {
  Eigen::Map<const Eigen::MatrixXd> col(x.data(), static_cast<Eigen::Index>(x.size()), 1);
  return forward(Eigen::MatrixXd(col)).col(0);
}

Eigen::VectorXd Approximator::backward(const Cache& cache, const Eigen::MatrixXd& dz) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(params_.size());
  Eigen::MatrixXd delta = dz;
  for (int l = layer_count() - 1; l >= 0; --l) {
    const int rows = sizes_[l + 1];
    const int cols = sizes_[l];
    const Eigen::MatrixXd& input = cache.activations[l];
    Eigen::Map<Eigen::MatrixXd> gw(g.data() + offsets_[l], rows, cols);
    Eigen::Map<Eigen::VectorXd> gb(g.data() + offsets_[l] + Eigen::Index(rows) * cols, rows);
    gw = delta * input.transpose();
    gb = delta.rowwise().sum();
    if (l > 0) {
      Eigen::Map<const Eigen::MatrixXd> w(params_.data() + offsets_[l], rows, cols);
      delta = ((w.transpose() * delta).array() * (1.0 - input.array().square())).matrix();
    }
  }
  return g;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

BceTerm bce_term(double logit, double target) {
  const double p = sigmoid(logit);
  const double pc = clamp_prob(p);
  const double loss = -(target * std::log(pc) + (1.0 - target) * std::log(1.0 - pc));
  const double d_p = -target / pc + (1.0 - target) / (1.0 - pc);
  return {loss, d_p * p * (1.0 - p)};
}

void check_finite_loss(const LossResult& r, const char* what) {
  for (Eigen::Index i = 0; i < r.per_sample.size(); ++i) {
    if (!std::isfinite(r.per_sample[i])) throw NonFiniteLoss(std::string("non-finite ") + what, static_cast<long>(i));
  }
  if (!std::isfinite(r.value)) throw NonFiniteLoss(std::string("non-finite ") + what, -1);
  if (!r.d_raw.allFinite()) {
    for (Eigen::Index j = 0; j < r.d_raw.cols(); ++j) {
      if (!r.d_raw.col(j).allFinite()) {
        throw NonFiniteLoss(std::string("non-finite gradient of ") + what, static_cast<long>(j));
      }
    }
  }
}

GradResult grad(const Approximator& f, const LossFn& loss_fn, const Eigen::MatrixXd& batch) {
  Approximator::Cache cache;
  const Eigen::MatrixXd raw = f.forward_raw(batch, cache);
  const LossResult r = loss_fn(raw);
  check_finite_loss(r, "loss");
  return {r.value, f.backward(cache, r.d_raw)};
}

namespace losses {

LossFn mean_squared(Eigen::MatrixXd targets) {
  return [targets = std::move(targets)](const Eigen::MatrixXd& raw) {
    const double n = static_cast<double>(raw.cols());
    const Eigen::MatrixXd diff = raw - targets;
    LossResult r;
    r.per_sample = 0.5 * diff.colwise().squaredNorm().transpose();
    r.value = r.per_sample.sum() / n;
    r.d_raw = diff / n;
    return r;
  };
}

LossFn binary_cross_entropy(Eigen::VectorXd targets, Eigen::VectorXd weights) {
  return [targets = std::move(targets), weights = std::move(weights)](const Eigen::MatrixXd& raw) {
    const Eigen::Index n = raw.cols();
    LossResult r;
    r.per_sample.resize(n);
    r.d_raw.resize(1, n);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const BceTerm t = bce_term(raw(0, i), targets[i]);
      r.per_sample[i] = weights[i] * t.loss;
      total += r.per_sample[i];
      r.d_raw(0, i) = weights[i] * t.d_logit / static_cast<double>(n);
    }
    r.value = total / static_cast<double>(n);
    return r;
  };
}

LossFn categorical_cross_entropy(std::vector<int> labels, Eigen::VectorXd weights) {
  return [labels = std::move(labels), weights = std::move(weights)](const Eigen::MatrixXd& raw) {
    const Eigen::Index n = raw.cols();
    const Eigen::MatrixXd probs = apply_head(Head::Softmax, raw);
    LossResult r;
    r.per_sample.resize(n);
    r.d_raw = probs;
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = std::max(probs(labels[i], i), 1e-300);
      r.per_sample[i] = -weights[i] * std::log(p);
      total += r.per_sample[i];
      r.d_raw(labels[i], i) -= 1.0;
      r.d_raw.col(i) *= weights[i] / static_cast<double>(n);
    }
    r.value = total / static_cast<double>(n);
    return r;
  };
}

}  // namespace losses

Adam::Adam(Eigen::Index parameter_count, AdamConfig cfg)
    : cfg_(cfg), m_(Eigen::VectorXd::Zero(parameter_count)), v_(Eigen::VectorXd::Zero(parameter_count)) {
  if (cfg_.total_steps < 1) throw std::invalid_argument("optimizer total_steps must be >= 1");
}

double Adam::current_lr() const {
  if (!cfg_.linear_decay) return cfg_.learning_rate;
  const double remaining = 1.0 - static_cast<double>(step_) / static_cast<double>(cfg_.total_steps);
  return cfg_.learning_rate * std::max(0.0, remaining);
}

void Adam::step(Approximator& f, const Eigen::VectorXd& gradient) { step(f, gradient, current_lr()); }

void Adam::step(Approximator& f, const Eigen::VectorXd& gradient, double lr) {
  if (gradient.size() != m_.size() || f.parameter_count() != m_.size()) {
    throw std::invalid_argument("gradient/parameter size does not match optimizer state");
  }
  if (step_ >= cfg_.total_steps) throw std::logic_error("optimizer step budget exhausted");
  ++step_;
  m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * gradient;
  v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * gradient.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  f.params().array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.epsilon);
  if (!f.all_finite()) throw std::runtime_error("non-finite parameter after optimizer step");
}

namespace {

double relative_error(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6});
}

}  // namespace

double finite_diff_check(const Approximator& f, const LossFn& loss_fn, const Eigen::MatrixXd& batch, double eps) {
  Approximator probe = f;
  const Eigen::VectorXd analytic = grad(f, loss_fn, batch).gradient;
  return finite_diff_check({&probe}, [&] { return loss_fn(probe.forward_raw(batch)).value; }, {analytic}, eps);
}

double finite_diff_check(std::vector<Approximator*> nets, const std::function<double()>& loss,
                         const std::vector<Eigen::VectorXd>& analytic, double eps) {
  if (nets.size() != analytic.size()) throw std::invalid_argument("one analytic gradient per network required");
  double worst = 0.0;
  for (std::size_t k = 0; k < nets.size(); ++k) {
    Eigen::VectorXd& p = nets[k]->params();
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p[i] = saved + eps;
      const double up = loss();
      p[i] = saved - eps;
      const double down = loss();
      p[i] = saved;
      worst = std::max(worst, relative_error(analytic[k][i], (up - down) / (2.0 * eps)));
    }
  }
  return worst;
}

std::uint64_t parameter_hash(const Approximator& f) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(f.params().data());
  const std::size_t n = static_cast<std::size_t>(f.params().size()) * sizeof(double);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace hoil
