#include "hoil/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace hoil {

namespace {

constexpr double kProbTolerance = 1e-9;

std::map<std::vector<double>, int> build_inverse(const std::vector<std::vector<double>>& rows,
                                                 const char* which) {
  std::map<std::vector<double>, int> inverse;
  for (int s = 0; s < static_cast<int>(rows.size()); ++s) {
    auto [it, inserted] = inverse.emplace(rows[s], s);
    if (!inserted) {
      std::ostringstream msg;
      msg << "encoder " << which << " is not injective: states " << it->second << " and " << s
          << " share an observation";
      throw std::invalid_argument(msg.str());
    }
  }
  return inverse;
}

int sample_index(std::span<const double> probs, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double acc = 0.0;
  int last_positive = 0;
  for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;
}

std::vector<std::vector<std::vector<Transition>>> restrict_kernel(const DualObsEnv& env,
                                                                  const std::vector<bool>& impassable) {
  const auto& kernel = env.definition().kernel;
  if (impassable.empty()) return kernel;
  if (static_cast<int>(impassable.size()) != env.state_count()) {
    throw std::invalid_argument("impassable mask size does not match the state count");
  }
  auto restricted = kernel;
  for (int s = 0; s < env.state_count(); ++s) {
    for (auto& successors : restricted[s]) {
      for (auto& t : successors) {
        if (impassable[t.next]) t.next = s;
      }
    }
  }
  return restricted;
}

std::vector<double> backup(const DualObsEnv& env,
                           const std::vector<std::vector<std::vector<Transition>>>& kernel,
                           const std::vector<double>& values, std::vector<std::vector<double>>* q_out) {
  const int S = env.state_count();
  const int A = env.action_count();
  std::vector<double> next(S, 0.0);
  if (q_out) q_out->assign(S, std::vector<double>(A, 0.0));
  for (int s = 0; s < S; ++s) {
    if (env.is_terminal(s)) continue;
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < A; ++a) {
      double q = env.true_reward(s, a);
      for (const auto& t : kernel[s][a]) {
        if (!env.is_terminal(t.next)) q += env.gamma() * t.prob * values[t.next];
      }
      if (q_out) (*q_out)[s][a] = q;
      best = std::max(best, q);
    }
    next[s] = best;
  }
  return next;
}

}  // namespace

DualObsEnv::DualObsEnv(MdpDefinition def) : def_(std::move(def)) {
  if (def_.blocked.empty()) def_.blocked.assign(def_.state_count, false);
  validate();
  inverse_e_ = build_inverse(def_.encoder_e, "E");
  inverse_l_ = build_inverse(def_.encoder_l, "L");
}

void DualObsEnv::validate() const {
  const int S = def_.state_count;
  const int A = def_.action_count;
  if (S < 1 || A < 1) throw std::invalid_argument("environment needs at least one state and action");
  if (!(def_.gamma > 0.0 && def_.gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0,1)");
  if (def_.max_episode_steps < 1) throw std::invalid_argument("max_episode_steps must be >= 1");
  if (static_cast<int>(def_.kernel.size()) != S || static_cast<int>(def_.reward.size()) != S ||
      static_cast<int>(def_.terminal.size()) != S || static_cast<int>(def_.start_distribution.size()) != S ||
      static_cast<int>(def_.encoder_e.size()) != S || static_cast<int>(def_.encoder_l.size()) != S ||
      static_cast<int>(def_.blocked.size()) != S) {
    throw std::invalid_argument("environment tables must have one entry per state");
  }
  for (int s = 0; s < S; ++s) {
    if (static_cast<int>(def_.kernel[s].size()) != A || static_cast<int>(def_.reward[s].size()) != A) {
      throw std::invalid_argument("environment tables must have one entry per action");
    }
    for (int a = 0; a < A; ++a) {
      double total = 0.0;
      for (const auto& t : def_.kernel[s][a]) {
        if (t.next < 0 || t.next >= S || t.prob < 0.0) {
          throw std::invalid_argument("transition kernel has an invalid successor");
        }
        total += t.prob;
      }
      if (std::abs(total - 1.0) > kProbTolerance) {
        std::ostringstream msg;
        msg << "transition probabilities at (" << s << "," << a << ") sum to " << total;
        throw std::invalid_argument(msg.str());
      }
    }
  }
  const double start_total = std::accumulate(def_.start_distribution.begin(), def_.start_distribution.end(), 0.0);
  if (std::abs(start_total - 1.0) > kProbTolerance) {
    throw std::invalid_argument("start distribution must sum to 1");
  }
  const auto check_dims = [S](const std::vector<std::vector<double>>& rows, const char* which) {
    for (int s = 1; s < S; ++s) {
      if (rows[s].size() != rows[0].size()) {
        throw std::invalid_argument(std::string("encoder ") + which + " has ragged rows");
      }
    }
    if (rows[0].empty()) throw std::invalid_argument(std::string("encoder ") + which + " is empty");
  };
  check_dims(def_.encoder_e, "E");
  check_dims(def_.encoder_l, "L");
}

int DualObsEnv::obs_dim(Space space) const {
  return static_cast<int>((space == Space::Expert ? def_.encoder_e : def_.encoder_l).front().size());
}

const std::vector<double>& DualObsEnv::observe(Space space, int state) const {
  check_state(state);
  return space == Space::Expert ? def_.encoder_e[state] : def_.encoder_l[state];
}

std::optional<int> DualObsEnv::decode(Space space, std::span<const double> obs) const {
  const auto& inverse = space == Space::Expert ? inverse_e_ : inverse_l_;
  auto it = inverse.find(std::vector<double>(obs.begin(), obs.end()));
  if (it == inverse.end()) return std::nullopt;
  return it->second;
}

const std::vector<Transition>& DualObsEnv::transitions(int state, int action) const {
  check_state(state);
  check_action(action);
  return def_.kernel[state][action];
}

double DualObsEnv::true_reward(int state, int action) const {
  check_state(state);
  check_action(action);
  return def_.reward[state][action];
}

bool DualObsEnv::has_blocked_region() const {
  return std::any_of(def_.blocked.begin(), def_.blocked.end(), [](bool b) { return b; });
}

int DualObsEnv::sample_start(Rng& rng) const { return sample_index(def_.start_distribution, rng); }

DualObsEnv::StepResult DualObsEnv::step(int state, int action, Rng& rng) const {
  const auto& successors = transitions(state, action);
  int next = successors.front().next;
  if (successors.size() > 1) {
    std::vector<double> probs;
    probs.reserve(successors.size());
    for (const auto& t : successors) probs.push_back(t.prob);
    next = successors[sample_index(probs, rng)].next;
  }
  return {next, def_.terminal[next], def_.reward[state][action]};
}

int DualObsEnv::cell_to_state(Cell c) const {
  if (def_.grid) {
    if (c.row < 0 || c.row >= def_.grid->height || c.col < 0 || c.col >= def_.grid->width) {
      throw std::out_of_range("cell outside the grid");
    }
    return c.row * def_.grid->width + c.col;
  }
  if (def_.lattice) {
    const int n = def_.lattice->half_cells;
    if (std::abs(c.row) > n || std::abs(c.col) > n) throw std::out_of_range("cell outside the lattice");
    return (c.row + n) * (2 * n + 1) + (c.col + n);
  }
  throw std::logic_error("environment has no cell layout");
}

Cell DualObsEnv::state_to_cell(int state) const {
  check_state(state);
  if (def_.grid) return {state / def_.grid->width, state % def_.grid->width};
  if (def_.lattice) {
    const int n = def_.lattice->half_cells;
    return {state / (2 * n + 1) - n, state % (2 * n + 1) - n};
  }
  throw std::logic_error("environment has no cell layout");
}

DualObsEnv DualObsEnv::with_max_episode_steps(int steps) const {
  MdpDefinition copy = def_;
  copy.max_episode_steps = steps;
  return DualObsEnv(std::move(copy));
}

void DualObsEnv::check_state(int s) const {
  if (s < 0 || s >= def_.state_count) throw std::out_of_range("state index out of range");
}

void DualObsEnv::check_action(int a) const {
  if (a < 0 || a >= def_.action_count) throw std::out_of_range("action index out of range");
}

std::vector<std::vector<double>> one_hot_rows(int n) {
  std::vector<std::vector<double>> rows(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) rows[i][i] = 1.0;
  return rows;
}

DualObsEnv make_dual_grid(int width, int height, Cell goal, std::vector<Cell> blocked_region,
                          std::uint64_t seed, GridOptions options) {
  if (width < 1 || height < 1 || width * height < 4) {
    throw std::invalid_argument("grid must have at least 4 cells");
  }
  const auto inside = [&](Cell c) { return c.row >= 0 && c.row < height && c.col >= 0 && c.col < width; };
  if (!inside(goal) || !inside(options.start)) throw std::invalid_argument("goal/start outside the grid");
  if (goal == options.start) throw std::invalid_argument("start cell coincides with the goal");
  for (const Cell& c : blocked_region) {
    if (!inside(c)) throw std::invalid_argument("blocked cell outside the grid");
    if (c == goal) throw std::invalid_argument("goal lies inside the blocked region");
  }

  const int S = width * height;
  const auto index = [width](Cell c) { return c.row * width + c.col; };

  MdpDefinition def;
  std::ostringstream id;
  id << "grid" << width << "x" << height << "-g" << goal.row << "." << goal.col << "-s" << seed;
  def.id = id.str();
  def.state_count = S;
  def.action_count = 4;
  def.gamma = options.gamma;
  def.max_episode_steps = options.max_episode_steps;
  def.kernel.assign(S, std::vector<std::vector<Transition>>(4));
  def.reward.assign(S, std::vector<double>(4, 0.0));
  def.terminal.assign(S, false);
  def.blocked.assign(S, false);
  def.start_distribution.assign(S, 0.0);
  def.start_distribution[index(options.start)] = 1.0;
  def.terminal[index(goal)] = true;
  for (const Cell& c : blocked_region) def.blocked[index(c)] = true;

  constexpr int kRowDelta[4] = {-1, 1, 0, 0};
  constexpr int kColDelta[4] = {0, 0, -1, 1};
  for (int s = 0; s < S; ++s) {
    const Cell c{s / width, s % width};
    for (int a = 0; a < 4; ++a) {
      Cell n{c.row + kRowDelta[a], c.col + kColDelta[a]};
      if (!inside(n)) n = c;
      def.kernel[s][a] = {Transition{index(n), 1.0}};
      def.reward[s][a] = (index(n) == index(goal) && s != index(goal)) ? 1.0 : 0.0;
    }
  }

  Rng rng(derive_seed(seed, 0));
  std::vector<int> perm(S);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  def.encoder_e.assign(S, std::vector<double>(S, 0.0));
  for (int s = 0; s < S; ++s) def.encoder_e[s][perm[s]] = 1.0;

  // Affine O_L map; redraw until comfortably invertible.
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  double m00 = 0, m01 = 0, m10 = 0, m11 = 0;
  for (;;) {
    m00 = coef(rng);
    m01 = coef(rng);
    m10 = coef(rng);
    m11 = coef(rng);
    const double det = m00 * m11 - m01 * m10;
    if (std::abs(det) < 1e-6) continue;
    const double frob2 = m00 * m00 + m01 * m01 + m10 * m10 + m11 * m11;
    // condition number of a 2x2 matrix from its Frobenius norm and determinant
    const double disc = std::sqrt(std::max(0.0, frob2 * frob2 - 4.0 * det * det));
    const double cond = std::sqrt((frob2 + disc) / std::max(frob2 - disc, 1e-300));
    if (cond <= 4.0) break;
  }
  const double b0 = 0.5 * coef(rng);
  const double b1 = 0.5 * coef(rng);
  def.encoder_l.assign(S, std::vector<double>(2, 0.0));
  for (int s = 0; s < S; ++s) {
    const double u = height > 1 ? 2.0 * (s / width) / (height - 1) - 1.0 : 0.0;
    const double v = width > 1 ? 2.0 * (s % width) / (width - 1) - 1.0 : 0.0;
    def.encoder_l[s] = {m00 * u + m01 * v + b0, m10 * u + m11 * v + b1};
  }

  def.grid = GridLayout{width, height, options.start, goal, std::move(blocked_region)};
  return DualObsEnv(std::move(def));
}

DualObsEnv make_dual_pointmass(double arena_half_width, double rotation_e, double rotation_l,
                               int action_grid, std::uint64_t seed, PointMassOptions options) {
  if (rotation_e == rotation_l) throw std::invalid_argument("rotation_E must differ from rotation_L");
  if (action_grid < 3) throw std::invalid_argument("action_grid must be >= 3");
  const double spacing = 1.0;
  const int n = static_cast<int>(std::floor(arena_half_width / spacing));
  if (n < 1) throw std::invalid_argument("arena must hold at least a 3x3 lattice");
  const int side = 2 * n + 1;
  const int S = side * side;

  std::vector<int> steps(action_grid);
  const double half = 0.5 * (action_grid - 1);
  for (int k = 0; k < action_grid; ++k) steps[k] = static_cast<int>(std::lround(-half + k));
  const int A = action_grid * action_grid;

  const auto index = [n, side](int y, int x) { return (y + n) * side + (x + n); };
  const auto inside = [n](int y, int x) { return std::abs(y) <= n && std::abs(x) <= n; };
  const Cell target = options.target;
  const Cell start = options.start.value_or(Cell{-n, -n});
  if (!inside(target.row, target.col) || !inside(start.row, start.col)) {
    throw std::invalid_argument("target/start outside the arena");
  }
  if (start == target) throw std::invalid_argument("start coincides with the target");

  MdpDefinition def;
  std::ostringstream id;
  id << "pointmass" << n << "-a" << action_grid << "-s" << seed;
  def.id = id.str();
  def.state_count = S;
  def.action_count = A;
  def.gamma = options.gamma;
  def.max_episode_steps = options.max_episode_steps;
  def.kernel.assign(S, std::vector<std::vector<Transition>>(A));
  def.reward.assign(S, std::vector<double>(A, 0.0));
  def.terminal.assign(S, false);
  def.blocked.assign(S, false);
  def.start_distribution.assign(S, 0.0);
  def.start_distribution[index(start.row, start.col)] = 1.0;
  def.terminal[index(target.row, target.col)] = true;
  for (const Cell& c : options.masked) {
    if (!inside(c.row, c.col)) throw std::invalid_argument("masked cell outside the arena");
    if (c == target) throw std::invalid_argument("target lies inside the masked sub-arena");
    def.blocked[index(c.row, c.col)] = true;
  }

  for (int y = -n; y <= n; ++y) {
    for (int x = -n; x <= n; ++x) {
      const int s = index(y, x);
      for (int a = 0; a < A; ++a) {
        const int ny = std::clamp(y + steps[a / action_grid], -n, n);
        const int nx = std::clamp(x + steps[a % action_grid], -n, n);
        def.kernel[s][a] = {Transition{index(ny, nx), 1.0}};
        const double dy = (ny - target.row) * spacing;
        const double dx = (nx - target.col) * spacing;
        def.reward[s][a] = -std::sqrt(dx * dx + dy * dy);
      }
    }
  }

  Rng rng(derive_seed(seed, 1));
  std::uniform_real_distribution<double> scale_draw(0.5, 2.0);
  const auto scale_e = options.scale_e.value_or(std::pair{1.0, 1.0});
  std::pair<double, double> scale_l;
  if (options.scale_l) {
    scale_l = *options.scale_l;
  } else {
    scale_l.first = scale_draw(rng);
    scale_l.second = scale_draw(rng);
  }
  if (scale_e.first == 0.0 || scale_e.second == 0.0 || scale_l.first == 0.0 || scale_l.second == 0.0) {
    throw std::invalid_argument("observation scalings must be nonzero");
  }
  const auto encode = [](double x, double y, double rot, std::pair<double, double> scale) {
    const double c = std::cos(rot);
    const double s = std::sin(rot);
    return std::vector<double>{scale.first * (c * x - s * y), scale.second * (s * x + c * y)};
  };
  def.encoder_e.resize(S);
  def.encoder_l.resize(S);
  for (int y = -n; y <= n; ++y) {
    for (int x = -n; x <= n; ++x) {
      def.encoder_e[index(y, x)] = encode(x * spacing, y * spacing, rotation_e, scale_e);
      def.encoder_l[index(y, x)] = encode(x * spacing, y * spacing, rotation_l, scale_l);
    }
  }
  def.lattice = LatticeLayout{n, spacing, target, steps};
  return DualObsEnv(std::move(def));
}

ValueIterationResult value_iteration(const DualObsEnv& env, const std::vector<bool>& impassable,
                                     double tolerance, int max_sweeps) {
  const auto kernel = restrict_kernel(env, impassable);
  ValueIterationResult result;
  result.values.assign(env.state_count(), 0.0);
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    auto next = backup(env, kernel, result.values, nullptr);
    double delta = 0.0;
    for (int s = 0; s < env.state_count(); ++s) delta = std::max(delta, std::abs(next[s] - result.values[s]));
    result.values = std::move(next);
    if (delta < tolerance) {
      result.sweeps = sweep;
      backup(env, kernel, result.values, &result.q);
      return result;
    }
  }
  throw std::runtime_error("value iteration did not converge within " + std::to_string(max_sweeps) +
                           " sweeps");
}

std::vector<double> bellman_backup(const DualObsEnv& env, const std::vector<double>& values,
                                   const std::vector<bool>& impassable) {
  return backup(env, restrict_kernel(env, impassable), values, nullptr);
}

int argmax_lowest(std::span<const double> q, double tie_tolerance) {
  if (q.empty()) throw std::invalid_argument("argmax of an empty range");
  const double best = *std::max_element(q.begin(), q.end());
  for (int a = 0; a < static_cast<int>(q.size()); ++a) {
    if (q[a] >= best - tie_tolerance) return a;
  }
  return 0;
}

std::vector<int> admissible_actions(const DualObsEnv& env, int state) {
  std::vector<int> actions;
  for (int a = 0; a < env.action_count(); ++a) {
    const auto& successors = env.transitions(state, a);
    const bool enters_blocked = std::any_of(successors.begin(), successors.end(), [&](const Transition& t) {
      return t.prob > 0.0 && t.next != state && env.is_blocked(t.next);
    });
    if (!enters_blocked) actions.push_back(a);
  }
  if (actions.empty()) {
    actions.resize(env.action_count());
    std::iota(actions.begin(), actions.end(), 0);
  }
  return actions;
}

}  // namespace hoil
