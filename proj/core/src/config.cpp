#include "hoil/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace hoil {

namespace {

namespace pt = boost::property_tree;

template <typename T>
T parse_as(const std::string& key, const std::string& text) {
  try {
    return boost::lexical_cast<T>(boost::trim_copy(text));
  } catch (const boost::bad_lexical_cast&) {
    throw std::invalid_argument("config key '" + key + "': cannot parse '" + text + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = boost::to_lower_copy(boost::trim_copy(text));
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw std::invalid_argument("config key '" + key + "': expected a boolean, got '" + text + "'");
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "unlimited" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);  // shortest text that round-trips
  return std::string(buf, r.ptr);
}

Cell parse_cell(const std::string& key, const std::string& text) {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(","));
  if (parts.size() != 2) throw std::invalid_argument("config key '" + key + "': expected 'row,col', got '" + text + "'");
  return Cell{parse_as<int>(key, parts[0]), parse_as<int>(key, parts[1])};
}

std::string format_cell(Cell c) { return std::to_string(c.row) + "," + std::to_string(c.col); }

std::vector<int> parse_ints(const std::string& key, const std::string& text) {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(","));
  std::vector<int> out;
  for (const auto& p : parts) {
    if (!boost::trim_copy(p).empty()) out.push_back(parse_as<int>(key, p));
  }
  return out;
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T, typename Access>
Field number(const std::string& key, Access access) {
  return {[key, access](ExperimentConfig& c, const std::string& v) { access(c) = parse_as<T>(key, v); },
          [access](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(access(const_cast<ExperimentConfig&>(c)));
            } else {
              return std::to_string(access(const_cast<ExperimentConfig&>(c)));
            }
          }};
}

template <typename Access>
Field flag(const std::string& key, Access access) {
  return {[key, access](ExperimentConfig& c, const std::string& v) { access(c) = parse_bool(key, v); },
          [access](const ExperimentConfig& c) {
            return std::string(access(const_cast<ExperimentConfig&>(c)) ? "true" : "false");
          }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    const auto add = [&t](const std::string& k, Field f) { t.emplace_back(k, std::move(f)); };

    add("method", {[](ExperimentConfig& c, const std::string& v) { c.method = parse_method(boost::trim_copy(v)); },
                   [](const ExperimentConfig& c) { return std::string(method_name(c.method)); }});
    add("total_steps", number<long>("total_steps", [](ExperimentConfig& c) -> long& { return c.train.total_steps; }));
    add("budget_ratio", {[](ExperimentConfig& c, const std::string& v) {
                           const std::string t = boost::to_lower_copy(boost::trim_copy(v));
                           c.budget_ratio = (t == "unlimited" || t == "inf") ? std::numeric_limits<double>::infinity()
                                                                            : parse_as<double>("budget_ratio", t);
                         },
                         [](const ExperimentConfig& c) { return format_double(c.budget_ratio); }});
    add("c", number<double>("c", [](ExperimentConfig& c) -> double& { return c.train.rejection.target_coverage; }));
    add("lambda", number<double>("lambda", [](ExperimentConfig& c) -> double& { return c.train.rejection.penalty_weight; }));
    add("lr", number<double>("lr", [](ExperimentConfig& c) -> double& { return c.train.learning_rate; }));
    add("batch_size", number<int>("batch_size", [](ExperimentConfig& c) -> int& { return c.train.batch_size; }));
    add("update_ratio", number<int>("update_ratio", [](ExperimentConfig& c) -> int& { return c.train.update_ratio; }));
    add("buffer", {[](ExperimentConfig& c, const std::string& v) { c.train.buffer_capacity = parse_as<std::size_t>("buffer", v); },
                   [](const ExperimentConfig& c) { return std::to_string(c.train.buffer_capacity); }});
    add("seeds", number<int>("seeds", [](ExperimentConfig& c) -> int& { return c.seeds; }));
    add("first_seed", {[](ExperimentConfig& c, const std::string& v) { c.first_seed = parse_as<std::uint64_t>("first_seed", v); },
                       [](const ExperimentConfig& c) { return std::to_string(c.first_seed); }});
    add("eval_interval", number<long>("eval_interval", [](ExperimentConfig& c) -> long& { return c.train.eval_interval; }));
    add("eval_episodes", number<int>("eval_episodes", [](ExperimentConfig& c) -> int& { return c.train.eval_episodes; }));
    add("out_dir", {[](ExperimentConfig& c, const std::string& v) { c.out_dir = boost::trim_copy(v); },
                    [](const ExperimentConfig& c) { return c.out_dir.string(); }});
    add("n_demos", number<int>("n_demos", [](ExperimentConfig& c) -> int& { return c.n_demo_trajectories; }));

    add("env.family", {[](ExperimentConfig& c, const std::string& v) {
                         const std::string t = boost::to_lower_copy(boost::trim_copy(v));
                         if (t == "grid") c.env.family = EnvFamily::Grid;
                         else if (t == "pointmass") c.env.family = EnvFamily::PointMass;
                         else throw std::invalid_argument("env.family must be grid or pointmass, got '" + v + "'");
                       },
                       [](const ExperimentConfig& c) {
                         return std::string(c.env.family == EnvFamily::Grid ? "grid" : "pointmass");
                       }});
    add("env.size", number<int>("env.size", [](ExperimentConfig& c) -> int& { return c.env.size; }));
    add("env.blocked", {[](ExperimentConfig& c, const std::string& v) { c.env.blocked = parse_cells(v); },
                        [](const ExperimentConfig& c) { return format_cells(c.env.blocked); }});
    add("env.start", {[](ExperimentConfig& c, const std::string& v) { c.env.start = parse_cell("env.start", v); },
                      [](const ExperimentConfig& c) { return format_cell(c.env.start); }});
    add("env.goal", {[](ExperimentConfig& c, const std::string& v) { c.env.goal = parse_cell("env.goal", v); },
                     [](const ExperimentConfig& c) { return format_cell(c.env.goal); }});
    add("env.max_steps", number<int>("env.max_steps", [](ExperimentConfig& c) -> int& { return c.env.max_episode_steps; }));
    add("env.gamma", number<double>("env.gamma", [](ExperimentConfig& c) -> double& { return c.env.gamma; }));
    add("env.epsilon", number<double>("env.epsilon", [](ExperimentConfig& c) -> double& { return c.env.pi1_epsilon; }));
    add("env.action_grid", number<int>("env.action_grid", [](ExperimentConfig& c) -> int& { return c.env.action_grid; }));

    add("train.hidden", {[](ExperimentConfig& c, const std::string& v) { c.train.hidden = parse_ints("train.hidden", v); },
                         [](const ExperimentConfig& c) {
                           std::string s;
                           for (std::size_t i = 0; i < c.train.hidden.size(); ++i) {
                             if (i) s += ",";
                             s += std::to_string(c.train.hidden[i]);
                           }
                           return s;
                         }});
    add("train.n_evolving", number<int>("train.n_evolving", [](ExperimentConfig& c) -> int& { return c.train.n_evolving; }));
    add("train.pretrain_epochs", number<int>("train.pretrain_epochs", [](ExperimentConfig& c) -> int& { return c.train.pretrain_epochs; }));
    add("train.pretrain_min_steps",
        number<int>("train.pretrain_min_steps", [](ExperimentConfig& c) -> int& { return c.train.pretrain_min_steps; }));
    add("train.steps_per_iteration",
        number<int>("train.steps_per_iteration", [](ExperimentConfig& c) -> int& { return c.train.steps_per_iteration; }));
    add("train.discriminator_passes",
        number<int>("train.discriminator_passes", [](ExperimentConfig& c) -> int& { return c.train.discriminator_passes; }));
    add("train.bc_epochs", number<int>("train.bc_epochs", [](ExperimentConfig& c) -> int& { return c.train.bc_epochs; }));
    add("train.d2_pretrain_epochs",
        number<int>("train.d2_pretrain_epochs", [](ExperimentConfig& c) -> int& { return c.train.d2_pretrain_epochs; }));
    add("train.d2_rejection_weight",
        number<double>("train.d2_rejection_weight", [](ExperimentConfig& c) -> double& { return c.train.d2_rejection_weight; }));
    add("train.self_normalize_weights",
        flag("train.self_normalize_weights", [](ExperimentConfig& c) -> bool& { return c.train.self_normalize_weights; }));
    add("train.calibration_epochs",
        number<int>("train.calibration_epochs", [](ExperimentConfig& c) -> int& { return c.train.calibration_epochs; }));
    add("train.queried_h_into_weighted_set",
        flag("train.queried_h_into_weighted_set", [](ExperimentConfig& c) -> bool& { return c.train.queried_h_into_weighted_set; }));
    add("train.clip_ratio", number<double>("train.clip_ratio", [](ExperimentConfig& c) -> double& { return c.train.clip_ratio; }));
    add("train.entropy_coef", number<double>("train.entropy_coef", [](ExperimentConfig& c) -> double& { return c.train.entropy_coef; }));
    add("train.value_coef", number<double>("train.value_coef", [](ExperimentConfig& c) -> double& { return c.train.value_coef; }));
    add("train.running_reward_norm",
        flag("train.running_reward_norm", [](ExperimentConfig& c) -> bool& { return c.train.running_reward_norm; }));

    add("lbc.rounds", number<int>("lbc.rounds", [](ExperimentConfig& c) -> int& { return c.lbc.rounds; }));
    add("lbc.episodes_per_round",
        number<int>("lbc.episodes_per_round", [](ExperimentConfig& c) -> int& { return c.lbc.episodes_per_round; }));
    add("lbc.epochs", number<int>("lbc.epochs", [](ExperimentConfig& c) -> int& { return c.lbc.epochs; }));
    add("lbc.batch_size", number<int>("lbc.batch_size", [](ExperimentConfig& c) -> int& { return c.lbc.batch_size; }));
    return t;
  }();
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& [k, f] : fields()) {
    if (k == key) return f;
  }
  throw std::invalid_argument("unknown config key '" + key + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
  train.validate();
  if (n_demo_trajectories < 1 || seeds < 1) throw std::invalid_argument("counts must be positive");
  if (!(std::isinf(budget_ratio) && budget_ratio > 0) && !(budget_ratio >= 0.0 && budget_ratio <= 1.0)) {
    throw std::invalid_argument("budget_ratio must lie in [0,1] or be unlimited");
  }
  if (env.size < 1 || env.max_episode_steps < 1) throw std::invalid_argument("env.size and env.max_steps must be positive");
  if (!(env.pi1_epsilon >= 0.0 && env.pi1_epsilon <= 1.0)) throw std::invalid_argument("env.epsilon must lie in [0,1]");
  if (lbc.rounds < 1 || lbc.episodes_per_round < 1) throw std::invalid_argument("lbc counts must be positive");
}

ExperimentConfig corridor_config() {
  ExperimentConfig c;
  c.env.family = EnvFamily::Grid;
  c.env.size = 5;
  c.env.blocked = {{1, 0}, {2, 0}};
  c.env.start = {4, 0};
  c.env.goal = {0, 0};
  c.env.max_episode_steps = 5;
  c.env.pi1_epsilon = 0.1;

  IwreConfig& t = c.train;
  t.learning_rate = 1e-3;
  t.total_steps = 40'000;
  t.steps_per_iteration = 1024;
  t.discriminator_passes = 4;
  t.buffer_capacity = 64;
  t.bc_epochs = 1000;
  t.pretrain_min_steps = 2000;
  t.self_normalize_weights = true;
  t.queried_h_into_weighted_set = true;
  t.eval_interval = 4000;
  t.eval_episodes = 1;
  return c;
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      set_config_value(base, name, node.data());
      continue;
    }
    for (const auto& [key, leaf] : node) set_config_value(base, name + "." + key, leaf.data());
  }
  base.validate();
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  field(key).set(cfg, value);
}

std::string get_config_value(const ExperimentConfig& cfg, const std::string& key) { return field(key).get(cfg); }

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, f] : fields()) k.push_back(name);
    return k;
  }();
  return keys;
}

std::string to_ini(const ExperimentConfig& cfg) {
  std::ostringstream os;
  std::string section;
  for (const auto& [key, f] : fields()) {
    const auto dot = key.find('.');
    const std::string sec = dot == std::string::npos ? "" : key.substr(0, dot);
    if (sec != section) {
      os << "\n[" << sec << "]\n";
      section = sec;
    }
    os << (dot == std::string::npos ? key : key.substr(dot + 1)) << " = " << f.get(cfg) << "\n";
  }
  return os.str();
}

std::vector<Cell> parse_cells(const std::string& text) {
  std::vector<Cell> out;
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(";"));
  for (const auto& p : parts) {
    if (!boost::trim_copy(p).empty()) out.push_back(parse_cell("cell list", p));
  }
  return out;
}

std::string format_cells(const std::vector<Cell>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) s += ";";
    s += format_cell(cells[i]);
  }
  return s;
}

DualObsEnv build_env(const EnvSpec& spec, std::uint64_t seed) {
  if (spec.family == EnvFamily::Grid) {
    GridOptions go;
    go.start = spec.start;
    go.gamma = spec.gamma;
    go.max_episode_steps = spec.max_episode_steps;
    return make_dual_grid(spec.size, spec.size, spec.goal, spec.blocked, seed, go);
  }
  PointMassOptions po;
  po.gamma = spec.gamma;
  po.max_episode_steps = spec.max_episode_steps;
  po.target = spec.goal;
  po.start = spec.start;
  po.masked = spec.blocked;
  return make_dual_pointmass(static_cast<double>(spec.size), 0.0, 0.5, spec.action_grid, seed, po);
}

}  // namespace hoil
