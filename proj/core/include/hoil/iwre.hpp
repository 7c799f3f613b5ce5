#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "hoil/data.hpp"
#include "hoil/density.hpp"
#include "hoil/rejection.hpp"

namespace hoil {

/// Cap on observation-coexistence queries. A negative max means unlimited.
class QueryBudget {
 public:
  static constexpr long kUnlimited = -1;

  explicit QueryBudget(long max_queries = kUnlimited);
  static QueryBudget from_ratio(double ratio, long total_steps);

  long max_queries() const { return max_; }
  long used() const { return used_; }
  bool unlimited() const { return max_ < 0; }
  bool exhausted() const { return !unlimited() && used_ >= max_; }
  long remaining() const;

  /// Records one query; throws std::logic_error if the cap would be exceeded.
  void consume();

 private:
  long max_;
  long used_ = 0;
};

struct CalibrationRecord {
  Instance x_l;
  TernaryLabel teacher;
};

/// FIFO store of teacher-labelled O_L instances.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 5000);

  void push(CalibrationRecord record);
  bool full() const { return records_.size() >= capacity_; }
  std::size_t size() const { return records_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::deque<CalibrationRecord>& records() const { return records_; }
  void clear() { records_.clear(); }

 private:
  std::size_t capacity_;
  std::deque<CalibrationRecord> records_;
};

struct IwreConfig {
  std::vector<int> hidden{64, 64};
  double learning_rate = 3e-4;
  RejectionConfig rejection;

  int n_evolving = 20;
  int pretrain_epochs = 100;
  int pretrain_min_steps = 0;  // floor on (D_w1, g_1) updates when the data set is tiny
  int batch_size = 256;
  int update_ratio = 3;  // policy epochs per discriminator epoch over each fresh batch
  int steps_per_iteration = 256;
  int discriminator_passes = 1;  // D_w2 minibatch passes over each fresh batch
  long total_steps = 100'000;  // pi_2 environment steps

  int bc_epochs = 100;
  int d2_pretrain_epochs = 100;
  double d2_rejection_weight = 1.0;  // coefficient of the rejection term in D_w2's loss
  bool self_normalize_weights = false;  // rescale each batch's alpha to mean 1

  std::size_t buffer_capacity = 5000;
  int calibration_epochs = 4;
  bool queried_h_into_weighted_set = false;

  double clip_ratio = 0.2;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  bool running_reward_norm = true;

  long eval_interval = 5000;
  int eval_episodes = 20;

  void validate() const;
};

struct PretrainOutput {
  std::vector<Trajectory> evolving;
  Discriminator d1;
  RejectionHead g1;
};

/// Collects evolving data from pi_1 and trains (D_w1, g_1) against the demonstrations.
PretrainOutput pretrain(const DualObsEnv& env, const Policy& pi_1, const std::vector<Trajectory>& demos_e,
                        const IwreConfig& cfg, std::uint64_t seed);

/// Same, on evolving data collected elsewhere.
PretrainOutput pretrain_on(const DualObsEnv& env, std::vector<Trajectory> evolving,
                           const std::vector<Trajectory>& demos_e, const IwreConfig& cfg, std::uint64_t seed);

/// Query gate on a pi_2 instance: D_2 puts it on the pi_2 side (no weighted
/// pi_1 mass covers it) and g_2 rejects it, both at threshold 0.5.
bool query_gate(double d2_output, double g2_output);
bool should_query(const Discriminator& d2, const RejectionHead& g2, const Instance& x_l, const QueryBudget& budget);

/// Observation-coexistence operation: the O_E view of x_l's latent state.
Instance oc_query(const DualObsEnv& env, const Instance& x_l, QueryBudget& budget);

/// Teacher-label mapping for calibration: targets for D_w2 (role convention
/// of density.hpp) and g_2.
///   H -> D target demo side (0), g target 1
///   O -> D target demo side (0), g target 0
///   N -> D target learner side (1), g target 1
struct CalibrationTargets {
  double d_target;
  double g_target;
};
CalibrationTargets calibration_targets(TernaryLabel teacher);

struct CalibrationOptimizers {
  Adam* d2 = nullptr;
  Adam* g2 = nullptr;
  double learning_rate = 3e-4;
  int batch_size = 256;
  int epochs = 4;
};

/// Adds the record; if the buffer is then full, trains D_w2 and g_2 on it and
/// clears it. Returns true when an update ran.
bool calibrate_from_teacher(Discriminator& d2, RejectionHead& g2, const Instance& x_l, TernaryLabel teacher,
                            ReplayBuffer& buffer, const CalibrationOptimizers& opt, Rng& rng);

/// Supervised pass over whatever the buffer holds (no-op when empty).
void calibrate_on_buffer(Discriminator& d2, RejectionHead& g2, const ReplayBuffer& buffer,
                         const CalibrationOptimizers& opt, Rng& rng);

/// On-policy data for one clipped-surrogate update.
struct PolicyBatch {
  Eigen::MatrixXd obs;          // obs_dim x n
  std::vector<int> actions;
  Eigen::VectorXd old_log_prob;
  Eigen::VectorXd returns;      // discounted return-to-go
  Eigen::VectorXd advantages;   // returns - V_old
};

/// Columns idx of a batch, for minibatch updates.
PolicyBatch slice(const PolicyBatch& b, const std::vector<Eigen::Index>& idx);

struct PpoConfig {
  double clip_ratio = 0.2;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
};

/// Per-step rewards are aligned with `steps`; episodes are split at t == 0.
PolicyBatch prepare_policy_batch(const NeuralPolicy& pi, const std::vector<DualInstance>& steps,
                                 const std::vector<double>& rewards, double gamma);

/// Clipped surrogate + value regression - entropy bonus, as a loss on the raw outputs.
LossFn ppo_loss(const PolicyBatch& batch, int action_count, const PpoConfig& cfg);

/// One gradient step. Throws NonFiniteLoss on a non-finite advantage.
double policy_update(NeuralPolicy& pi, const PolicyBatch& batch, Adam& opt, const PpoConfig& cfg,
                     std::optional<double> learning_rate = std::nullopt);

/// Maximum-likelihood fit of the logits to (obs, action) pairs.
void behavior_clone(NeuralPolicy& pi, const Eigen::MatrixXd& obs, const std::vector<int>& actions, int epochs,
                    int batch_size, double learning_rate, Rng& rng);

struct MetricRecord {
  long step = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
  long queries_used = 0;
  double coverage = std::numeric_limits<double>::quiet_NaN();
  double h_visit_fraction = std::numeric_limits<double>::quiet_NaN();
};

struct EvalResult {
  double mean_return = 0.0;
  double std_return = 0.0;
  std::vector<bool> visited;  // (s, a) pairs touched, indexed s * A + a
};

/// Greedy-action returns under true rewards.
EvalResult evaluate(const Policy& policy, const DualObsEnv& env, int n_episodes, Rng& rng);

/// Fraction of `label` pairs visited (NaN when the class is empty).
double visit_fraction(const std::vector<bool>& visited, const SupportPartition& truth, TernaryLabel label);

enum class RewardSource : std::uint8_t {
  WeightedDiscriminator,  // IWRE / IW: Eq. (9) with importance weights from D_w1
  PlainDiscriminator,     // GAIL: unit weights, no D_w1
  TrueReward,             // RL oracle
};

struct QueryStats {
  long queried = 0;
  long queried_true_h = 0;
  long visited = 0;
  long visited_true_h = 0;
  long calibrations = 0;
};

struct TrainResult {
  NeuralPolicy policy;
  Discriminator d2;
  std::optional<RejectionHead> g2;
  std::vector<MetricRecord> metrics;
  std::vector<double> reward_trace;  // mean raw reward per iteration
  QueryStats query_stats;
  long queries_used = 0;
};

struct TrainInputs {
  const DualObsEnv* env = nullptr;
  const PretrainOutput* pretrained = nullptr;      // required unless source is TrueReward
  const std::vector<Trajectory>* evolving = nullptr;  // used by PlainDiscriminator (and BC init)
  const SupportPartition* truth = nullptr;         // metrics and query statistics only
  RewardSource source = RewardSource::WeightedDiscriminator;
  bool bc_init = true;
  /// Called at every metric record with the policy that was evaluated.
  std::function<void(const MetricRecord&, const NeuralPolicy&)> on_record;
  /// Called after every iteration with the steps taken so far and the partial result.
  std::function<void(long, const TrainResult&)> on_iteration;
};

/// The full training loop. Rejection, queries, and g_2 are active only for
/// WeightedDiscriminator with a budget that allows at least one query.
TrainResult train(const TrainInputs& in, const IwreConfig& cfg, QueryBudget budget, std::uint64_t seed);

/// Seed streams used by the training components.
namespace streams {
inline constexpr std::uint64_t kDemos = 1;
inline constexpr std::uint64_t kEvolving = 2;
inline constexpr std::uint64_t kPretrainInit = 3;
inline constexpr std::uint64_t kPretrainBatches = 4;
inline constexpr std::uint64_t kPolicyInit = 5;
inline constexpr std::uint64_t kD2Init = 6;
inline constexpr std::uint64_t kG2Init = 7;
inline constexpr std::uint64_t kRollouts = 8;
inline constexpr std::uint64_t kBatches = 9;
inline constexpr std::uint64_t kEval = 10;
inline constexpr std::uint64_t kCalibration = 11;
inline constexpr std::uint64_t kBc = 12;
}  // namespace streams

}  // namespace hoil
