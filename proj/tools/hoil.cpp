// Command-line front end: run experiments, draw plots, compare supports, self-check.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "hoil/dataset_io.hpp"
#include "hoil/experiment.hpp"
#include "hoil/plots.hpp"
#include "hoil/selfcheck.hpp"

namespace fs = std::filesystem;
using namespace hoil;

namespace {

struct ConfigArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;  // --<key> value, one per config key
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.config_path, "INI file layered over the built-in corridor task")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", args.sets, "key=value override, repeatable");
  for (const auto& key : config_keys()) {
    const std::string name = key.size() == 1 ? "-" + key : "--" + key;
    cmd->add_option(name, args.flags[key], "override " + key)->group("Config keys");
  }
}

ExperimentConfig resolve_config(const ConfigArgs& args) {
  ExperimentConfig cfg = args.config_path.empty() ? corridor_config() : load_config(args.config_path);
  for (const auto& key : config_keys()) {
    const auto it = args.flags.find(key);
    if (it != args.flags.end() && !it->second.empty()) set_config_value(cfg, key, it->second);
  }
  for (const auto& kv : args.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got " + kv);
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + p.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int cmd_run(const ConfigArgs& args, bool dry_run) {
  const ExperimentConfig cfg = resolve_config(args);
  if (dry_run) {
    std::cout << to_ini(cfg);
    return 0;
  }
  std::printf("method %s, %d seed(s) from %llu, output %s\n", method_name(cfg.method), cfg.seeds,
              static_cast<unsigned long long>(cfg.first_seed), cfg.out_dir.string().c_str());
  const ExperimentSummary s = run_experiment(cfg, true);
  for (const auto& o : s.seeds) {
    if (o.ok) {
      const auto& r = o.final_record();
      std::printf("seed %llu: final return %.4f, H-visit %.3f, queries %ld, %.1f s\n",
                  static_cast<unsigned long long>(o.seed), r.mean_return, r.h_visit_fraction, o.queries_used,
                  o.wallclock_seconds);
    } else {
      std::printf("seed %llu: FAILED %s\n", static_cast<unsigned long long>(o.seed), o.error.c_str());
    }
  }
  std::printf("mean final return %.4f +/- %.4f (expert %.4f, pi_1 %.4f)\n", s.mean_final_return, s.std_final_return,
              s.mean_expert_return, s.mean_pi1_return);
  return s.failed == 0 ? 0 : 1;
}

int cmd_plot(const fs::path& metrics_dir, fs::path out_dir) {
  if (out_dir.empty()) out_dir = metrics_dir / "plots";
  const PlotReport r = emit_plots(metrics_dir, out_dir);
  for (const auto& p : r.written) std::printf("wrote %s\n", p.string().c_str());
  for (const auto& w : r.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  return 0;
}

int cmd_report(const fs::path& run_dir, std::uint64_t seed, int episodes, const fs::path& out) {
  const ExperimentConfig cfg = load_config(run_dir / "config.ini");
  const Fixture fx = make_fixture(cfg, seed);
  const std::string stem = "seed_" + std::to_string(seed);
  std::vector<Checkpoint> checkpoints;
  const fs::path model = run_dir / (stem + ".policy");
  if (fs::exists(model)) {
    long step = -1;
    const fs::path csv = run_dir / (stem + ".csv");
    if (fs::exists(csv)) {
      const auto metrics = parse_metrics_csv(read_file(csv));
      if (!metrics.empty()) step = metrics.back().step;
    }
    checkpoints.push_back({step, NeuralPolicy(load_model(model), Space::Learner, fx.env.action_count())});
  } else {
    std::fprintf(stderr, "warning: no %s; reporting reference policies only\n", model.string().c_str());
  }
  const auto rows = support_overlap(fx.env, fx.pi_e, fx.pi_1, checkpoints, episodes, seed);
  const std::string text = overlap_csv(rows);
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream(out, std::ios::binary) << text;
    std::printf("wrote %s\n", out.string().c_str());
  }
  return 0;
}

int cmd_check(std::uint64_t seed) {
  bool ok = true;
  for (const auto& r : run_all_checks(seed)) {
    std::printf("%-4s %-28s %.3e (< %.0e)\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.value, r.threshold);
    ok = ok && r.pass;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Imitation across heterogeneous observation spaces with importance weighting and rejection"};
  app.require_subcommand(1);

  ConfigArgs run_args;
  bool dry_run = false;
  auto* run = app.add_subcommand("run", "Train a method on every configured seed and write metrics");
  add_config_options(run, run_args);
  run->add_flag("--dry-run", dry_run, "Print the resolved configuration and exit");

  fs::path metrics_dir, plot_out;
  auto* plot = app.add_subcommand("plot", "Learning curves and budget sweep from metric files");
  plot->add_option("metrics_dir", metrics_dir, "Run directory, or a directory of run directories")
      ->required()
      ->check(CLI::ExistingDirectory);
  plot->add_option("-o,--out", plot_out, "Output directory (default <metrics_dir>/plots)");

  fs::path run_dir, report_out;
  std::uint64_t report_seed = 0;
  int episodes = 20;
  auto* report = app.add_subcommand("report", "Support overlap of pi_E, pi_1 and a trained policy");
  report->add_option("run_dir", run_dir, "Directory written by `hoil run`")->required()->check(CLI::ExistingDirectory);
  report->add_option("--seed", report_seed, "Seed whose policy to load");
  report->add_option("--episodes", episodes, "Greedy rollouts per policy")->check(CLI::PositiveNumber);
  report->add_option("-o,--out", report_out, "CSV output (default stdout)");

  std::uint64_t check_seed = 0;
  auto* check = app.add_subcommand("check", "Gradient, occupancy and persistence self-checks");
  check->add_option("--seed", check_seed, "Seed for the random test networks");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(run_args, dry_run);
    if (*plot) return cmd_plot(metrics_dir, plot_out);
    if (*report) return cmd_report(run_dir, report_seed, episodes, report_out);
    if (*check) return cmd_check(check_seed);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
