#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hoil/iwre.hpp"

namespace hoil {

/// All seed files of one run directory.
struct RunGroup {
  std::string label;        // directory name
  std::string method;       // from aggregate.csv, or "unknown"
  double budget_ratio = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> seed_names;
  std::vector<std::vector<MetricRecord>> seeds;
};

/// Finds run directories (metrics_dir itself and its immediate children) that
/// hold seed_*.csv files. Unreadable or malformed files are skipped with a
/// warning appended to `warnings`.
std::vector<RunGroup> load_run_groups(const std::filesystem::path& metrics_dir, std::vector<std::string>& warnings);

struct CurvePoint {
  long step = 0;
  double mean = 0.0;
  double std = 0.0;
};

/// Seed mean and population std of mean_return, aligning the k-th record of
/// every seed; step is the k-th records' mean step, truncated to the shortest seed.
std::vector<CurvePoint> mean_curve(const RunGroup& group);

struct PlotReport {
  std::vector<std::filesystem::path> written;
  std::vector<std::string> warnings;
};

/// Writes learning_curves.svg/.dat, budget_sweep.svg/.dat (when any group has
/// a finite budget ratio) and manifest.txt into out_dir.
PlotReport emit_plots(const std::filesystem::path& metrics_dir, const std::filesystem::path& out_dir);

}  // namespace hoil
