#include "hoil/experiment.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "hoil/dataset_io.hpp"

namespace hoil {

namespace {

constexpr std::uint64_t kReportStream = 13;

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_num(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  return std::stod(s);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

double greedy_return(const DualObsEnv& env, const Policy& p, std::uint64_t seed) {
  Rng rng(derive_seed(seed, streams::kEval));
  return rollout(env, p, rng, false, ActionMode::Greedy).episode_return;
}

std::vector<Checkpoint> single_checkpoint(long step, const NeuralPolicy& p) { return {Checkpoint{step, p}}; }

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return os.str();
}

std::string fixture_hash(const Fixture& f) {
  Dataset d;
  d.header = DatasetHeader{f.env.id(), f.env.obs_dim(Space::Expert), f.env.obs_dim(Space::Learner), f.env.gamma(), 0, "fixture"};
  d.trajectories = f.demos;
  d.trajectories.insert(d.trajectories.end(), f.evolving.begin(), f.evolving.end());
  std::string bytes = serialize_dataset(d);
  for (const auto& row : f.pi_1.table()) {
    for (double p : row) bytes += num(p) + ",";
  }
  return sha256_hex(bytes);
}

Fixture make_fixture(const ExperimentConfig& cfg, std::uint64_t seed) {
  DualObsEnv env = build_env(cfg.env, seed);
  TabularPolicy pi_e = expert_policy(env);
  TabularPolicy pi_1 = auxiliary_policy(env, cfg.env.pi1_epsilon);
  SupportPartition truth = support_sets(env, pi_e, pi_1);
  Rng demo_rng(derive_seed(seed, streams::kDemos));
  std::vector<Trajectory> demos;
  for (int i = 0; i < cfg.n_demo_trajectories; ++i) demos.push_back(rollout(env, pi_e, demo_rng, true));
  Rng evo_rng(derive_seed(seed, streams::kEvolving));
  std::vector<Trajectory> evolving = collect_evolving_data(env, pi_1, cfg.train.n_evolving, evo_rng);
  const double expert_return = greedy_return(env, pi_e, seed);
  const double pi1_return = greedy_return(env, pi_1, seed);
  Fixture f{std::move(env), std::move(pi_e), std::move(pi_1), std::move(truth), std::move(demos), std::move(evolving),
            expert_return, pi1_return, {}};
  f.hash = fixture_hash(f);
  return f;
}

SeedOutcome run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  SeedOutcome out;
  out.seed = seed;
  try {
    const Fixture fx = make_fixture(cfg, seed);
    return run_seed(cfg, fx, seed);
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

SeedOutcome run_seed(const ExperimentConfig& cfg, const Fixture& fx, std::uint64_t seed) {
  SeedOutcome out;
  out.seed = seed;
  out.fixture_hash = fx.hash;
  out.expert_return = fx.expert_return;
  out.pi1_return = fx.pi1_return;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const IwreConfig& tc = cfg.train;
    const auto adversarial = [&](RewardSource source, const PretrainOutput* pre, QueryBudget budget, bool bc_init) {
      TrainInputs in;
      in.env = &fx.env;
      in.pretrained = pre;
      in.evolving = &fx.evolving;
      in.truth = &fx.truth;
      in.source = source;
      in.bc_init = bc_init;
      in.on_record = [&](const MetricRecord& m, const NeuralPolicy& p) { out.checkpoints.push_back(Checkpoint{m.step, p}); };
      TrainResult r = train(in, tc, budget, seed);
      out.metrics = std::move(r.metrics);
      out.query_stats = r.query_stats;
      out.queries_used = r.queries_used;
    };

    switch (cfg.method) {
      case Method::IWRE:
      case Method::IW: {
        const PretrainOutput pre = pretrain_on(fx.env, fx.evolving, fx.demos, tc, seed);
        const QueryBudget budget = cfg.method == Method::IW ? QueryBudget(0)
                                                            : QueryBudget::from_ratio(cfg.budget_ratio, tc.total_steps);
        adversarial(RewardSource::WeightedDiscriminator, &pre, budget, true);
        break;
      }
      case Method::GAIL: adversarial(RewardSource::PlainDiscriminator, nullptr, QueryBudget(0), true); break;
      case Method::RLOracle: adversarial(RewardSource::TrueReward, nullptr, QueryBudget(0), false); break;
      case Method::BC: {
        NeuralPolicy p = bc_train(fx.env, fx.evolving, tc, seed);
        Rng eval(derive_seed(seed, streams::kEval));
        const EvalResult er = evaluate(p, fx.env, tc.eval_episodes, eval);
        MetricRecord m;
        m.mean_return = er.mean_return;
        m.std_return = er.std_return;
        m.h_visit_fraction = visit_fraction(er.visited, fx.truth, TernaryLabel::LatentDemo);
        out.metrics = {m};
        out.checkpoints = single_checkpoint(0, p);
        break;
      }
      case Method::LBC: {
        LbcResult r = lbc_train(fx.env, fx.pi_1, tc, cfg.lbc, &fx.truth, seed);
        out.metrics = std::move(r.metrics);
        out.queries_used = out.metrics.back().queries_used;
        out.checkpoints = single_checkpoint(out.metrics.back().step, r.policy);
        break;
      }
    }
    if (out.metrics.empty()) throw std::logic_error("run produced no metric records");
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  out.wallclock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

ExperimentSummary summarize(std::vector<SeedOutcome> outcomes) {
  ExperimentSummary s;
  s.seeds = std::move(outcomes);
  std::vector<double> finals;
  double h = 0.0;
  int h_count = 0;
  for (const auto& o : s.seeds) {
    if (!o.ok) {
      ++s.failed;
      continue;
    }
    finals.push_back(o.final_record().mean_return);
    s.mean_expert_return += o.expert_return;
    s.mean_pi1_return += o.pi1_return;
    if (!std::isnan(o.final_record().h_visit_fraction)) {
      h += o.final_record().h_visit_fraction;
      ++h_count;
    }
  }
  if (finals.empty()) return s;
  const double n = static_cast<double>(finals.size());
  s.mean_final_return = std::accumulate(finals.begin(), finals.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : finals) ss += (x - s.mean_final_return) * (x - s.mean_final_return);
  s.std_final_return = std::sqrt(ss / n);
  s.mean_expert_return /= n;
  s.mean_pi1_return /= n;
  s.mean_final_h_visit = h_count ? h / h_count : std::numeric_limits<double>::quiet_NaN();
  return s;
}

std::string metrics_csv(const std::vector<MetricRecord>& metrics) {
  std::ostringstream os;
  os << "step,mean_return,std_return,queries_used,coverage,H_visit_fraction\n";
  for (const auto& m : metrics) {
    os << m.step << ',' << num(m.mean_return) << ',' << num(m.std_return) << ',' << m.queries_used << ','
       << num(m.coverage) << ',' << num(m.h_visit_fraction) << '\n';
  }
  return os.str();
}

std::vector<MetricRecord> parse_metrics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("step,", 0) != 0) throw std::invalid_argument("metrics file lacks its header row");
  std::vector<MetricRecord> out;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw std::invalid_argument("metrics row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " columns");
    try {
      MetricRecord m;
      m.step = std::stol(cells[0]);
      m.mean_return = parse_num(cells[1]);
      m.std_return = parse_num(cells[2]);
      m.queries_used = std::stol(cells[3]);
      m.coverage = parse_num(cells[4]);
      m.h_visit_fraction = parse_num(cells[5]);
      if (!out.empty() && m.step < out.back().step) throw std::invalid_argument("step decreases");
      out.push_back(m);
    } catch (const std::exception& e) {
      throw std::invalid_argument("metrics row " + std::to_string(row) + ": " + e.what());
    }
  }
  return out;
}

std::string aggregate_csv(const ExperimentConfig& cfg, const ExperimentSummary& s) {
  std::ostringstream os;
  os << "seed,method,budget_ratio,status,final_step,final_return,final_H_visit_fraction,queries_used,expert_return,"
        "pi1_return,fixture_sha256,error\n";
  const std::string method = method_name(cfg.method);
  // Only IWRE queries; every other method runs with an effective budget of zero.
  const std::string ratio = cfg.method == Method::IWRE ? get_config_value(cfg, "budget_ratio") : "0";
  for (const auto& o : s.seeds) {
    os << o.seed << ',' << method << ',' << ratio << ',' << (o.ok ? "ok" : "failed") << ',';
    if (o.ok) {
      const auto& m = o.final_record();
      os << m.step << ',' << num(m.mean_return) << ',' << num(m.h_visit_fraction) << ',' << o.queries_used << ',';
    } else {
      os << ",,,,";
    }
    std::string err = o.error;
    for (char& c : err) {
      if (c == ',' || c == '\n') c = ';';
    }
    os << num(o.expert_return) << ',' << num(o.pi1_return) << ',' << o.fixture_hash << ',' << err << '\n';
  }
  os << "mean," << method << ',' << ratio << ',' << (s.seeds.size() - static_cast<std::size_t>(s.failed)) << "/"
     << s.seeds.size() << ",," << num(s.mean_final_return) << ',' << num(s.mean_final_h_visit) << ",,"
     << num(s.mean_expert_return) << ',' << num(s.mean_pi1_return) << ",,\n";
  return os.str();
}

ExperimentSummary run_experiment(const ExperimentConfig& cfg, bool write_files) {
  cfg.validate();
  std::vector<SeedOutcome> outcomes;
  for (int k = 0; k < cfg.seeds; ++k) outcomes.push_back(run_seed(cfg, cfg.first_seed + static_cast<std::uint64_t>(k)));
  ExperimentSummary s = summarize(std::move(outcomes));
  if (!write_files) return s;

  std::filesystem::create_directories(cfg.out_dir);
  write_file(cfg.out_dir / "config.ini", to_ini(cfg));
  for (const auto& o : s.seeds) {
    const std::string stem = "seed_" + std::to_string(o.seed);
    write_file(cfg.out_dir / (stem + ".csv"), metrics_csv(o.metrics));
    write_file(cfg.out_dir / (stem + ".wallclock"), num(o.wallclock_seconds) + "\n");
    if (o.ok && !o.checkpoints.empty()) save_model(cfg.out_dir / (stem + ".policy"), o.checkpoints.back().policy.net(), "pi2");
  }
  write_file(cfg.out_dir / "aggregate.csv", aggregate_csv(cfg, s));
  return s;
}

std::vector<OverlapRow> support_overlap(const DualObsEnv& env, const TabularPolicy& pi_e, const TabularPolicy& pi_1,
                                        const std::vector<Checkpoint>& checkpoints, int episodes, std::uint64_t seed) {
  if (!env.grid() && !env.lattice()) throw std::invalid_argument("support overlap needs a tabular grid or lattice environment");
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  const SupportPartition truth = support_sets(env, pi_e, pi_1);
  const auto row_for = [&](const std::string& name, long step, const Policy& p) {
    Rng rng(derive_seed(seed, kReportStream));
    std::vector<bool> visited(truth.labels.size(), false);
    long visits = 0;
    long in_n = 0;
    for (int e = 0; e < episodes; ++e) {
      const Trajectory traj = rollout(env, p, rng, false, ActionMode::Greedy);
      for (const auto& st : traj.steps) {
        visited[static_cast<std::size_t>(st.latent_state) * env.action_count() + st.action] = true;
        ++visits;
        if (truth.at(st.latent_state, st.action) == TernaryLabel::NonExpert) ++in_n;
      }
    }
    OverlapRow r;
    r.name = name;
    r.step = step;
    r.h_visit = visit_fraction(visited, truth, TernaryLabel::LatentDemo);
    r.o_visit = visit_fraction(visited, truth, TernaryLabel::ObservedDemo);
    r.n_share = visits ? static_cast<double>(in_n) / static_cast<double>(visits) : 0.0;
    return r;
  };
  std::vector<OverlapRow> rows{row_for("pi_E", -1, pi_e), row_for("pi_1", -1, pi_1)};
  for (const auto& c : checkpoints) rows.push_back(row_for("pi_2", c.step, c.policy));
  return rows;
}

std::string overlap_csv(const std::vector<OverlapRow>& rows) {
  std::ostringstream os;
  os << "policy,step,H_visit_fraction,O_visit_fraction,N_visit_share\n";
  for (const auto& r : rows) {
    os << r.name << ',' << r.step << ',' << num(r.h_visit) << ',' << num(r.o_visit) << ',' << num(r.n_share) << '\n';
  }
  return os.str();
}

}  // namespace hoil
