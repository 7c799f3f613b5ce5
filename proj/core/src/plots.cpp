#include "hoil/plots.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hoil/experiment.hpp"

namespace hoil {

namespace fs = std::filesystem;

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 60.0;
constexpr double kRight = 150.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 50.0;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string read_text(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + p.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text, PlotReport& report) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
  report.written.push_back(p);
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Axes {
  double x0, x1, y0, y1;
  double sx(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double sy(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

Axes padded(double x0, double x1, double y0, double y1) {
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double pad = 0.05 * (y1 - y0);
  return {x0, x1, y0 - pad, y1 + pad};
}

std::string frame(const Axes& a, const std::string& title, const std::string& xlabel, const std::string& ylabel,
                  const std::vector<std::pair<double, std::string>>& xticks) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << px(kWidth / 2 - kRight / 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" << escape(title)
     << "</text>\n";
  const double xl = a.sx(a.x0), xr = a.sx(a.x1), yb = a.sy(a.y0), yt = a.sy(a.y1);
  os << "<path d=\"M" << px(xl) << ',' << px(yt) << " L" << px(xl) << ',' << px(yb) << " L" << px(xr) << ',' << px(yb)
     << "\" stroke=\"black\" fill=\"none\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = a.y0 + (a.y1 - a.y0) * k / 4.0;
    os << "<text x=\"" << px(xl - 6) << "\" y=\"" << px(a.sy(v) + 4) << "\" text-anchor=\"end\">" << px(v) << "</text>\n";
  }
  for (const auto& [x, label] : xticks) {
    os << "<text x=\"" << px(a.sx(x)) << "\" y=\"" << px(yb + 16) << "\" text-anchor=\"middle\">" << escape(label) << "</text>\n";
  }
  os << "<text x=\"" << px((xl + xr) / 2) << "\" y=\"" << px(kHeight - 10) << "\" text-anchor=\"middle\">" << escape(xlabel)
     << "</text>\n";
  os << "<text transform=\"translate(14," << px((yt + yb) / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape(ylabel) << "</text>\n";
  return os.str();
}

std::string legend_entry(int index, const std::string& color, const std::string& label) {
  std::ostringstream os;
  const double y = kTop + 10 + 18.0 * index;
  const double x = kWidth - kRight + 12;
  os << "<rect x=\"" << px(x) << "\" y=\"" << px(y - 8) << "\" width=\"12\" height=\"10\" fill=\"" << color << "\"/>\n";
  os << "<text x=\"" << px(x + 18) << "\" y=\"" << px(y + 1) << "\">" << escape(label) << "</text>\n";
  return os.str();
}

std::string group_key(const RunGroup& g) { return g.label; }

}  // namespace

std::vector<RunGroup> load_run_groups(const fs::path& metrics_dir, std::vector<std::string>& warnings) {
  if (!fs::is_directory(metrics_dir)) throw std::invalid_argument("not a directory: " + metrics_dir.string());
  std::vector<fs::path> dirs{metrics_dir};
  for (const auto& e : fs::directory_iterator(metrics_dir)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin() + 1, dirs.end());
  std::vector<RunGroup> groups;
  for (const auto& dir : dirs) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
      const std::string name = e.path().filename().string();
      if (e.is_regular_file() && name.rfind("seed_", 0) == 0 && e.path().extension() == ".csv") files.push_back(e.path());
    }
    if (files.empty()) continue;
    std::sort(files.begin(), files.end());
    RunGroup g;
    g.label = dir == metrics_dir ? dir.filename().string() : dir.filename().string();
    if (g.label.empty()) g.label = "run";
    g.method = "unknown";
    const fs::path agg = dir / "aggregate.csv";
    if (fs::exists(agg)) {
      try {
        std::istringstream in(read_text(agg));
        std::string header, row;
        std::getline(in, header);
        if (std::getline(in, row)) {
          std::vector<std::string> cells;
          std::stringstream rs(row);
          std::string cell;
          while (std::getline(rs, cell, ',')) cells.push_back(cell);
          if (cells.size() >= 3) {
            g.method = cells[1];
            g.budget_ratio = cells[2] == "unlimited" ? std::numeric_limits<double>::infinity() : std::stod(cells[2]);
          }
        }
      } catch (const std::exception& e) {
        warnings.push_back("skipped " + agg.string() + ": " + e.what());
      }
    } else {
      warnings.push_back("no aggregate.csv in " + dir.string() + "; method and budget unknown");
    }
    for (const auto& f : files) {
      try {
        auto metrics = parse_metrics_csv(read_text(f));
        if (metrics.empty()) {
          warnings.push_back("skipped " + f.string() + ": no rows");
          continue;
        }
        g.seed_names.push_back(f.stem().string());
        g.seeds.push_back(std::move(metrics));
      } catch (const std::exception& e) {
        warnings.push_back("skipped " + f.string() + ": " + e.what());
      }
    }
    if (!g.seeds.empty()) groups.push_back(std::move(g));
  }
  return groups;
}

std::vector<CurvePoint> mean_curve(const RunGroup& group) {
  std::vector<CurvePoint> out;
  if (group.seeds.empty()) return out;
  std::size_t len = group.seeds.front().size();
  for (const auto& seed : group.seeds) len = std::min(len, seed.size());
  const double n = static_cast<double>(group.seeds.size());
  for (std::size_t k = 0; k < len; ++k) {
    CurvePoint p;
    double step = 0.0;
    for (const auto& seed : group.seeds) {
      step += static_cast<double>(seed[k].step);
      p.mean += seed[k].mean_return;
    }
    p.step = std::lround(step / n);
    p.mean /= n;
    for (const auto& seed : group.seeds) p.std += (seed[k].mean_return - p.mean) * (seed[k].mean_return - p.mean);
    p.std = std::sqrt(p.std / n);
    out.push_back(p);
  }
  return out;
}

PlotReport emit_plots(const fs::path& metrics_dir, const fs::path& out_dir) {
  PlotReport report;
  const auto groups = load_run_groups(metrics_dir, report.warnings);
  fs::create_directories(out_dir);
  if (groups.empty()) {
    report.warnings.push_back("no metrics files under " + metrics_dir.string());
  } else {
    // Learning curves.
    std::vector<std::vector<CurvePoint>> curves;
    double x1 = 0.0, y0 = 1e300, y1 = -1e300;
    for (const auto& g : groups) {
      curves.push_back(mean_curve(g));
      for (const auto& p : curves.back()) {
        x1 = std::max(x1, static_cast<double>(p.step));
        y0 = std::min(y0, p.mean - p.std);
        y1 = std::max(y1, p.mean + p.std);
      }
    }
    if (y0 > y1) y0 = 0.0, y1 = 1.0;
    const Axes a = padded(0.0, x1, y0, y1);
    std::vector<std::pair<double, std::string>> ticks;
    for (int k = 0; k <= 4; ++k) ticks.emplace_back(a.x0 + (a.x1 - a.x0) * k / 4.0, std::to_string(static_cast<long>(a.x0 + (a.x1 - a.x0) * k / 4.0)));
    std::ostringstream svg;
    svg << frame(a, "Learning curves (mean +/- 1 std over seeds)", "environment steps", "return", ticks);
    std::ostringstream dat;
    dat << "# group step mean std";
    std::size_t max_seeds = 0;
    for (const auto& g : groups) max_seeds = std::max(max_seeds, g.seeds.size());
    for (std::size_t k = 0; k < max_seeds; ++k) dat << " seed" << k;
    dat << "\n";
    for (std::size_t i = 0; i < groups.size(); ++i) {
      const std::string color = kPalette[i % std::size(kPalette)];
      const auto& c = curves[i];
      if (c.empty()) {
        report.warnings.push_back("group " + groups[i].label + " has no records");
        continue;
      }
      std::ostringstream band, line;
      for (const auto& p : c) band << (band.tellp() ? " L" : "M") << px(a.sx(p.step)) << ',' << px(a.sy(p.mean + p.std));
      for (auto it = c.rbegin(); it != c.rend(); ++it) band << " L" << px(a.sx(it->step)) << ',' << px(a.sy(it->mean - it->std));
      for (const auto& p : c) line << (line.tellp() ? " L" : "M") << px(a.sx(p.step)) << ',' << px(a.sy(p.mean));
      svg << "<path d=\"" << band.str() << " Z\" fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
      svg << "<path d=\"" << line.str() << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
      svg << legend_entry(static_cast<int>(i), color, group_key(groups[i]));
      for (std::size_t k = 0; k < c.size(); ++k) {
        dat << groups[i].label << ' ' << c[k].step << ' ' << num(c[k].mean) << ' ' << num(c[k].std);
        for (const auto& seed : groups[i].seeds) dat << ' ' << num(seed[k].mean_return);
        dat << "\n";
      }
    }
    svg << "</svg>\n";
    write_text(out_dir / "learning_curves.svg", svg.str(), report);
    write_text(out_dir / "learning_curves.dat", dat.str(), report);

    // Budget sweep: final return per budget ratio, one series per method.
    std::map<std::string, std::map<double, std::vector<double>>> sweep;
    for (const auto& g : groups) {
      if (std::isnan(g.budget_ratio)) continue;
      for (const auto& seed : g.seeds) sweep[g.method][g.budget_ratio].push_back(seed.back().mean_return);
    }
    std::set<double> ratios;
    for (const auto& [m, pts] : sweep) {
      for (const auto& [r, v] : pts) ratios.insert(r);
    }
    if (!ratios.empty()) {
      // Ratios are placed at evenly spaced positions in increasing order.
      std::map<double, double> pos;
      int k = 0;
      for (double r : ratios) pos[r] = k++;
      double lo = 1e300, hi = -1e300;
      std::map<std::string, std::vector<std::pair<double, double>>> means;
      std::ostringstream dat2;
      dat2 << "# method budget_ratio mean_final_return n_seeds finals...\n";
      for (const auto& [m, pts] : sweep) {
        for (const auto& [r, v] : pts) {
          double mean = 0.0;
          for (double x : v) mean += x;
          mean /= static_cast<double>(v.size());
          means[m].emplace_back(r, mean);
          lo = std::min(lo, mean);
          hi = std::max(hi, mean);
          dat2 << m << ' ' << num(r) << ' ' << num(mean) << ' ' << v.size();
          for (double x : v) dat2 << ' ' << num(x);
          dat2 << "\n";
        }
      }
      const Axes b = padded(-0.5, static_cast<double>(ratios.size()) - 0.5, std::min(lo, 0.0), std::max(hi, 1.0));
      std::vector<std::pair<double, std::string>> xt;
      for (double r : ratios) xt.emplace_back(pos[r], std::isinf(r) ? "unlimited" : px(r));
      std::ostringstream svg2;
      svg2 << frame(b, "Final return vs query budget ratio", "budget ratio", "mean final return", xt);
      int idx = 0;
      for (const auto& [m, pts] : means) {
        const std::string color = kPalette[idx % std::size(kPalette)];
        std::ostringstream line;
        for (const auto& [r, mean] : pts) line << (line.tellp() ? " L" : "M") << px(b.sx(pos[r])) << ',' << px(b.sy(mean));
        svg2 << "<path d=\"" << line.str() << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        for (const auto& [r, mean] : pts) {
          svg2 << "<circle cx=\"" << px(b.sx(pos[r])) << "\" cy=\"" << px(b.sy(mean)) << "\" r=\"4\" fill=\"" << color << "\"/>\n";
        }
        svg2 << legend_entry(idx++, color, m);
      }
      svg2 << "</svg>\n";
      write_text(out_dir / "budget_sweep.svg", svg2.str(), report);
      write_text(out_dir / "budget_sweep.dat", dat2.str(), report);
    }
  }
  std::ostringstream man;
  for (const auto& p : report.written) man << "wrote " << p.filename().string() << "\n";
  for (const auto& w : report.warnings) man << "warning " << w << "\n";
  write_text(out_dir / "manifest.txt", man.str(), report);
  return report;
}

}  // namespace hoil
