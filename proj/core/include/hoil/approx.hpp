#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

#include "hoil/types.hpp"

namespace hoil {

enum class Head : std::uint8_t { Sigmoid, Softmax, Linear };

const char* head_name(Head h);
Head parse_head(const std::string& name);

/// Multi-layer perceptron with tanh hidden units. Parameters live in one flat
/// vector laid out per layer as W (column-major, n_out x n_in) then b.
/// Batches are column-major: one sample per column.
class Approximator {
 public:
  Approximator() = default;
  Approximator(std::vector<int> layer_sizes, Head head);

  /// Orthogonal weights with gain 1 and zero biases.
  static Approximator orthogonal(std::vector<int> layer_sizes, Head head, Rng& rng);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int layer_count() const { return static_cast<int>(sizes_.size()) - 1; }
  const std::vector<int>& layer_sizes() const { return sizes_; }
  Head head() const { return head_; }
  Eigen::Index parameter_count() const { return params_.size(); }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  struct Cache {
    std::vector<Eigen::MatrixXd> activations;  // input, then each hidden layer's tanh output
  };

  /// Pre-head outputs (logits for sigmoid/softmax heads).
  Eigen::MatrixXd forward_raw(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd forward_raw(const Eigen::MatrixXd& x, Cache& cache) const;

  /// Head applied: sigmoid in (0,1), softmax columns summing to 1, or identity.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd forward(std::span<const double> x) const;

  /// Gradient of sum_ij dz(i,j) * raw(i,j) with respect to the parameters.
  Eigen::VectorXd backward(const Cache& cache, const Eigen::MatrixXd& dz) const;

  bool all_finite() const { return params_.allFinite(); }

 private:
  std::vector<int> sizes_;
  Head head_ = Head::Linear;
  Eigen::VectorXd params_;
  std::vector<Eigen::Index> offsets_;  // start of each layer's W block
};

Eigen::MatrixXd apply_head(Head head, const Eigen::MatrixXd& raw);

/// Value of a mean batch loss and its derivative with respect to the raw outputs.
struct LossResult {
  double value = 0.0;
  Eigen::MatrixXd d_raw;
  Eigen::VectorXd per_sample;  // unreduced loss per column, used for error reporting
};

using LossFn = std::function<LossResult(const Eigen::MatrixXd& raw)>;

struct GradResult {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

/// Analytic gradient of the loss with respect to all parameters of f.
/// Throws NonFiniteLoss naming the first offending column.
GradResult grad(const Approximator& f, const LossFn& loss_fn, const Eigen::MatrixXd& batch);

void check_finite_loss(const LossResult& r, const char* what);

namespace losses {

/// 0.5 * mean squared error over all outputs of a linear head.
LossFn mean_squared(Eigen::MatrixXd targets);

/// Weighted binary cross-entropy for a sigmoid head; probabilities are
/// clamped to [1e-6, 1-1e-6] with a straight-through gradient.
/// value = sum_i w_i * bce_i / n.
LossFn binary_cross_entropy(Eigen::VectorXd targets, Eigen::VectorXd weights);

/// Weighted categorical cross-entropy for a softmax head (mean over n).
LossFn categorical_cross_entropy(std::vector<int> labels, Eigen::VectorXd weights);

}  // namespace losses

inline constexpr double kProbClamp = 1e-6;

double clamp_prob(double p);
double sigmoid(double z);

/// Per-sample BCE of a clamped sigmoid and its derivative with respect to the logit.
struct BceTerm {
  double loss;
  double d_logit;
};
BceTerm bce_term(double logit, double target);

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long total_steps = 1'000'000;
  bool linear_decay = true;
};

class Adam {
 public:
  Adam() = default;
  Adam(Eigen::Index parameter_count, AdamConfig cfg);

  /// Learning rate that the next step will use; 0 once the schedule is spent.
  double current_lr() const;
  long steps() const { return step_; }
  const AdamConfig& config() const { return cfg_; }

  /// Descends along `gradient`. Throws if the step budget is exhausted or a
  /// parameter becomes non-finite.
  void step(Approximator& f, const Eigen::VectorXd& gradient);

  /// Same update with a caller-supplied rate, for loops that decay the rate
  /// against their own progress measure.
  void step(Approximator& f, const Eigen::VectorXd& gradient, double learning_rate);

  const Eigen::VectorXd& first_moment() const { return m_; }
  const Eigen::VectorXd& second_moment() const { return v_; }

 private:
  AdamConfig cfg_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  long step_ = 0;
};

/// Max relative error |a-n| / max(|a|, |n|, 1e-6) between grad() and central differences.
double finite_diff_check(const Approximator& f, const LossFn& loss_fn, const Eigen::MatrixXd& batch,
                         double eps = 1e-5);

/// Multi-network variant: `loss` evaluates the scalar objective from the
/// networks' current parameters; `analytic` holds one gradient per network.
double finite_diff_check(std::vector<Approximator*> nets, const std::function<double()>& loss,
                         const std::vector<Eigen::VectorXd>& analytic, double eps = 1e-5);

/// Order-sensitive 64-bit hash of the parameter bytes, for cheap equality checks.
std::uint64_t parameter_hash(const Approximator& f);

}  // namespace hoil
