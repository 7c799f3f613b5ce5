#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "hoil/experiment.hpp"
#include "hoil/plots.hpp"

using namespace hoil;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny(Method m) {
  ExperimentConfig cfg = corridor_config();
  cfg.method = m;
  cfg.seeds = 1;
  cfg.train.total_steps = 2048;
  cfg.train.eval_interval = 1024;
  cfg.train.pretrain_min_steps = 200;
  cfg.train.bc_epochs = 20;
  cfg.train.pretrain_epochs = 5;
  cfg.train.d2_pretrain_epochs = 5;
  cfg.lbc.rounds = 2;
  cfg.lbc.epochs = 5;
  return cfg;
}

fs::path fresh_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("hoil_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Sha256, KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(MetricsCsv, RoundTripIncludingNan) {
  std::vector<MetricRecord> m{{0, 0.0, 0.0, 0, 0.8, std::numeric_limits<double>::quiet_NaN()},
                              {100, 1.0 / 3.0, 0.25, 7, std::numeric_limits<double>::quiet_NaN(), 0.5}};
  const auto back = parse_metrics_csv(metrics_csv(m));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].mean_return, 1.0 / 3.0);
  EXPECT_TRUE(std::isnan(back[0].h_visit_fraction));
  EXPECT_TRUE(std::isnan(back[1].coverage));
  EXPECT_EQ(metrics_csv(back), metrics_csv(m));
}

TEST(MetricsCsv, RejectsMalformedFiles) {
  EXPECT_THROW(parse_metrics_csv("garbage\n"), std::invalid_argument);
  const std::string header = "step,mean_return,std_return,queries_used,coverage,H_visit_fraction\n";
  EXPECT_THROW(parse_metrics_csv(header + "1,2,3\n"), std::invalid_argument);
  EXPECT_THROW(parse_metrics_csv(header + "5,0,0,0,nan,nan\n4,0,0,0,nan,nan\n"), std::invalid_argument);
}

TEST(Fixture, HashDependsOnSeedOnly) {
  const auto cfg = tiny(Method::IWRE);
  EXPECT_EQ(make_fixture(cfg, 1).hash, make_fixture(cfg, 1).hash);
  EXPECT_NE(make_fixture(cfg, 1).hash, make_fixture(cfg, 2).hash);
  const auto fx = make_fixture(cfg, 0);
  EXPECT_EQ(fx.expert_return, 1.0);
  EXPECT_EQ(fx.pi1_return, 0.0);
  EXPECT_EQ(static_cast<int>(fx.demos.size()), cfg.n_demo_trajectories);
}

TEST(RunSeed, EveryMethodProducesMetrics) {
  for (Method m : {Method::IWRE, Method::IW, Method::GAIL, Method::BC, Method::LBC, Method::RLOracle}) {
    const auto o = run_seed(tiny(m), 0);
    EXPECT_TRUE(o.ok) << method_name(m) << ": " << o.error;
    ASSERT_FALSE(o.metrics.empty()) << method_name(m);
    EXPECT_TRUE(std::isfinite(o.final_record().mean_return));
  }
}

TEST(RunSeed, ComponentErrorsAreCaptured) {
  auto cfg = tiny(Method::IWRE);
  cfg.train.total_steps = 0;
  const auto o = run_seed(cfg, 0);
  EXPECT_FALSE(o.ok);
  EXPECT_FALSE(o.error.empty());
}

TEST(RunExperiment, WritesArtifactsAndPlots) {
  const auto root = fresh_dir("exp");
  auto cfg = tiny(Method::IWRE);
  cfg.seeds = 2;
  cfg.budget_ratio = 0.05;
  cfg.out_dir = root / "iwre";
  const auto s = run_experiment(cfg, true);
  EXPECT_EQ(s.failed, 0);
  for (const char* f : {"config.ini", "seed_0.csv", "seed_1.csv", "seed_0.policy", "seed_0.wallclock", "aggregate.csv"}) {
    EXPECT_TRUE(fs::exists(cfg.out_dir / f)) << f;
  }
  std::ifstream agg(cfg.out_dir / "aggregate.csv");
  std::string header;
  std::getline(agg, header);
  EXPECT_EQ(header.rfind("seed,method,budget_ratio,status", 0), 0u);

  std::ofstream(root / "iwre" / "seed_9.csv") << "broken\n";
  const auto report = emit_plots(root, root / "plots");
  EXPECT_TRUE(fs::exists(root / "plots" / "learning_curves.svg"));
  EXPECT_TRUE(fs::exists(root / "plots" / "budget_sweep.dat"));
  EXPECT_TRUE(fs::exists(root / "plots" / "manifest.txt"));
  ASSERT_FALSE(report.warnings.empty());
  EXPECT_NE(report.warnings.front().find("seed_9.csv"), std::string::npos);
  fs::remove_all(root);
}

TEST(MeanCurve, AlignsRecordsByPosition) {
  RunGroup g;
  g.seeds = {{{0, 0.0}, {100, 1.0}}, {{0, 0.0}, {110, 0.0}, {220, 1.0}}};
  const auto c = mean_curve(g);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[1].step, 105);
  EXPECT_DOUBLE_EQ(c[1].mean, 0.5);
  EXPECT_DOUBLE_EQ(c[1].std, 0.5);
}

TEST(SupportOverlap, ReferencePoliciesAreSeparated) {
  const auto fx = make_fixture(tiny(Method::IWRE), 0);
  const auto rows = support_overlap(fx.env, fx.pi_e, fx.pi_1, {}, 10, 0);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].h_visit, 1.0);
  EXPECT_EQ(rows[1].h_visit, 0.0);
  EXPECT_FALSE(overlap_csv(rows).empty());
}
