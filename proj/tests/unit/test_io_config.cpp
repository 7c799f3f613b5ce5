#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "hoil/config.hpp"
#include "hoil/dataset_io.hpp"

using namespace hoil;
namespace fs = std::filesystem;

namespace {

Dataset sample_dataset(std::uint64_t seed) {
  const auto env = build_env(corridor_config().env, seed);
  const auto pi = auxiliary_policy(env, 0.3);
  Rng rng(seed);
  Dataset ds;
  ds.header = {env.id(), env.obs_dim(Space::Expert), env.obs_dim(Space::Learner), env.gamma(), seed, "evolving"};
  ds.trajectories = collect_evolving_data(env, pi, 6, rng);
  return ds;
}

fs::path temp_path(const std::string& name) { return fs::temp_directory_path() / ("hoil_unit_" + name); }

}  // namespace

TEST(Dataset, FileRoundTripIsExact) {
  const auto ds = sample_dataset(1);
  const auto p = temp_path("ds.bin");
  save_dataset(p, ds);
  EXPECT_EQ(load_dataset(p), ds);
  fs::remove(p);
}

TEST(Dataset, KeepsEveryDoubleBit) {
  Dataset ds;
  ds.header = {"x", 1, 1, 0.1 + 0.2, 9, "demos"};
  Trajectory t;
  DualInstance d;
  d.obs_e = {std::numeric_limits<double>::denorm_min()};
  d.obs_l = {-0.0};
  d.reward = 1.0 / 3.0;
  t.steps.push_back(d);
  t.episode_return = -1e308;
  ds.trajectories.push_back(t);
  const Dataset back = parse_dataset(serialize_dataset(ds));
  EXPECT_EQ(back.header.gamma, 0.1 + 0.2);
  EXPECT_TRUE(std::signbit(back.trajectories[0].steps[0].obs_l[0]));
  EXPECT_EQ(back.trajectories[0].steps[0].obs_e[0], std::numeric_limits<double>::denorm_min());
  EXPECT_EQ(serialize_dataset(back), serialize_dataset(ds));
}

TEST(Dataset, TruncationReportsByteOffset) {
  const std::string bytes = serialize_dataset(sample_dataset(2));
  try {
    parse_dataset(bytes.substr(0, bytes.size() - 5));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), -1);
    EXPECT_GT(e.offset(), 0);
  }
}

TEST(Dataset, BadMagicReportsLine) {
  try {
    parse_dataset("not a dataset\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1);
    EXPECT_EQ(e.offset(), -1);
  }
}

TEST(Model, CheckpointRoundTrip) {
  Rng rng(3);
  const auto f = Approximator::orthogonal({3, 4, 2}, Head::Softmax, rng);
  const auto p = temp_path("model.bin");
  save_model(p, f, "pi2");
  std::string tag;
  const auto g = load_model(p, &tag);
  EXPECT_EQ(tag, "pi2");
  EXPECT_EQ(g.layer_sizes(), f.layer_sizes());
  EXPECT_EQ(g.head(), f.head());
  EXPECT_EQ(parameter_hash(g), parameter_hash(f));
  EXPECT_THROW(load_dataset(p), ParseError);
  fs::remove(p);
}

TEST(Config, IniRoundTrip) {
  ExperimentConfig cfg = corridor_config();
  cfg.budget_ratio = 0.05;
  cfg.train.learning_rate = 0.1 + 0.2;
  cfg.env.blocked = {{1, 0}, {2, 0}, {3, 3}};
  const ExperimentConfig back = parse_config(to_ini(cfg));
  EXPECT_EQ(to_ini(back), to_ini(cfg));
  EXPECT_EQ(back.train.learning_rate, 0.1 + 0.2);
  EXPECT_EQ(back.env.blocked, cfg.env.blocked);
}

TEST(Config, EveryKeyRoundTripsThroughText) {
  ExperimentConfig cfg = corridor_config();
  for (const auto& key : config_keys()) {
    ExperimentConfig copy = cfg;
    const std::string v = get_config_value(cfg, key);
    set_config_value(copy, key, v);
    EXPECT_EQ(get_config_value(copy, key), v) << key;
  }
}

TEST(Config, SectionsAndOverrides) {
  const auto cfg = parse_config("method = gail\nseeds = 2\n[env]\nsize = 6\nblocked = 1,1\n[train]\nhidden = 32,16\n");
  EXPECT_EQ(cfg.method, Method::GAIL);
  EXPECT_EQ(cfg.seeds, 2);
  EXPECT_EQ(cfg.env.size, 6);
  EXPECT_EQ(cfg.env.blocked, (std::vector<Cell>{{1, 1}}));
  EXPECT_EQ(cfg.train.hidden, (std::vector<int>{32, 16}));
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(parse_config("nonsense = 1\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("[env]\nsize = five\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("budget_ratio = 2\n"), std::invalid_argument);
  ExperimentConfig cfg = corridor_config();
  EXPECT_THROW(set_config_value(cfg, "train.running_reward_norm", "maybe"), std::invalid_argument);
}

TEST(Config, UnlimitedBudgetSpellings) {
  ExperimentConfig cfg = corridor_config();
  for (const char* s : {"unlimited", "inf"}) {
    set_config_value(cfg, "budget_ratio", s);
    EXPECT_TRUE(std::isinf(cfg.budget_ratio));
  }
  EXPECT_EQ(get_config_value(cfg, "budget_ratio"), "unlimited");
}

TEST(Config, Cells) {
  EXPECT_EQ(parse_cells("1,0;2,0"), (std::vector<Cell>{{1, 0}, {2, 0}}));
  EXPECT_EQ(format_cells({{1, 0}, {2, 0}}), "1,0;2,0");
  EXPECT_TRUE(parse_cells("").empty());
  EXPECT_THROW(parse_cells("1;2"), std::invalid_argument);
}

TEST(Config, LoadFromFile) {
  const auto p = temp_path("cfg.ini");
  std::ofstream(p) << "total_steps = 1234\n";
  EXPECT_EQ(load_config(p).train.total_steps, 1234);
  fs::remove(p);
  EXPECT_THROW(load_config(p), std::exception);
}
