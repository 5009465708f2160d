#pragma once

// Experiment drivers: tower comparison, image-cue ablation and the sparse
// sampling sweep. Every (variant, seed) pair is one training run followed by
// evaluation on a fixed held-out scene set. Runs execute on a small thread
// pool; results are collected by index, so the output does not depend on
// scheduling.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <functional>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "imvote/config.hpp"

namespace imvote::eval {

// One training job and the towers it reports.
struct ExperimentJob {
  std::string name;
  RunConfig config;
  std::vector<TowerKind> towers;
};

struct SeedResult {
  std::uint64_t seed = 0;
  ApReport ap;
};

struct VariantResult {
  std::string name;  // job, or job/tower when a job reports several towers
  std::vector<SeedResult> seeds;

  std::vector<double> maps() const {
    std::vector<double> out;
    for (const auto& s : seeds) out.push_back(s.ap.map);
    return out;
  }
};

struct ExperimentReport {
  ExperimentKind kind = ExperimentKind::Towers;
  std::vector<VariantResult> variants;
  // sparse only: joint minus point-only mAP per density, one entry per seed
  std::vector<std::pair<std::string, std::vector<double>>> deltas;

  const VariantResult* find(const std::string& name) const {
    for (const auto& v : variants)
      if (v.name == name) return &v;
    return nullptr;
  }
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct SparseDensity {
  std::string name;
  SamplingMethod method;
  double fraction;
};

inline const std::vector<SparseDensity>& sparse_densities() {
  static const std::vector<SparseDensity> d{
      {"full", SamplingMethod::Uniform, 1.0},
      {"uniform-25", SamplingMethod::Uniform, 0.25},
      {"uniform-5", SamplingMethod::Uniform, 0.05},
      {"keypoint-25", SamplingMethod::Keypoint, 0.25},
      {"keypoint-5", SamplingMethod::Keypoint, 0.05},
  };
  return d;
}

inline bool selected(const RunConfig& c, const std::string& name) {
  return c.variants.empty() || std::find(c.variants.begin(), c.variants.end(), name) != c.variants.end();
}

inline std::vector<ExperimentJob> experiment_jobs(const RunConfig& base) {
  std::vector<ExperimentJob> jobs;
  switch (base.experiment) {
    case ExperimentKind::Towers: {
      std::vector<TowerKind> towers;
      for (TowerKind t : kAllTowers)
        if (selected(base, tower_name(t))) towers.push_back(t);
      if (!towers.empty()) jobs.push_back({"towers", base, towers});
      break;
    }
    case ExperimentKind::CueAblation: {
      struct Ablation {
        const char* name;
        bool CueMask::*field;
      };
      static constexpr Ablation ablations[] = {{"all", nullptr},
                                               {"no_vote", &CueMask::vote},
                                               {"no_ray", &CueMask::ray},
                                               {"no_semantic", &CueMask::semantic},
                                               {"no_texture", &CueMask::texture}};
      for (const auto& a : ablations) {
        if (!selected(base, a.name)) continue;
        RunConfig c = base;
        if (a.field) c.net.cue_mask.*(a.field) = false;
        jobs.push_back({a.name, c, {TowerKind::Joint}});
      }
      break;
    }
    case ExperimentKind::Sparse: {
      for (const auto& d : sparse_densities()) {
        if (!selected(base, d.name)) continue;
        RunConfig c = base;
        c.sparse = SparseSpec{d.method, d.fraction};
        finalize(c);
        jobs.push_back({d.name, c, {TowerKind::Point, TowerKind::Joint}});
      }
      break;
    }
  }
  if (jobs.empty()) throw ConfigError("experiment.variants selects nothing");
  return jobs;
}

inline ExperimentReport run_experiment(const RunConfig& base,
                                       const std::function<void(const std::string&)>& log = {}) {
  validate(base);
  const auto jobs = experiment_jobs(base);
  const std::size_t n_seeds = base.seeds.size();
  const std::size_t n_runs = jobs.size() * n_seeds;
  std::vector<EvalResult> results(n_runs);
  std::vector<std::exception_ptr> errors(n_runs);
  std::atomic<std::size_t> next{0};
  std::mutex log_mu;

  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n_runs;) {
      const ExperimentJob& job = jobs[i / n_seeds];
      const std::uint64_t seed = base.seeds[i % n_seeds];
      try {
        TrainConfig tc = job.config.train;
        tc.seed = seed;
        const TrainResult tr = train(job.config.data, job.config.net, tc);
        results[i] = evaluate(tr.model, job.config.data, job.config.eval);
        if (log) {
          std::lock_guard lock(log_mu);
          log(job.name + " seed " + std::to_string(seed) + " done");
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned workers = base.workers > 0 ? static_cast<unsigned>(base.workers)
                                      : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(n_runs));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  ExperimentReport report;
  report.kind = base.experiment;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const ExperimentJob& job = jobs[j];
    for (TowerKind t : job.towers) {
      VariantResult v;
      switch (base.experiment) {
        case ExperimentKind::Towers: v.name = tower_name(t); break;
        case ExperimentKind::CueAblation: v.name = job.name; break;
        case ExperimentKind::Sparse: v.name = job.name + "/" + tower_name(t); break;
      }
      for (std::size_t s = 0; s < n_seeds; ++s)
        v.seeds.push_back({base.seeds[s], results[j * n_seeds + s][static_cast<int>(t)].ap});
      report.variants.push_back(std::move(v));
    }
    if (base.experiment == ExperimentKind::Sparse) {
      std::vector<double> d;
      for (std::size_t s = 0; s < n_seeds; ++s) {
        const EvalResult& r = results[j * n_seeds + s];
        d.push_back(r[static_cast<int>(TowerKind::Joint)].ap.map - r[static_cast<int>(TowerKind::Point)].ap.map);
      }
      report.deltas.emplace_back(job.name, std::move(d));
    }
  }
  return report;
}

namespace detail {
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}
}  // namespace detail

// variant,class,ap,map. Per-seed rows are tagged variant/seedN; variant/median
// rows hold per-class and overall medians. Sparse deltas use class "all".
inline std::string metrics_csv(const ExperimentReport& r) {
  std::ostringstream out;
  out << "variant,class,ap,map\n";
  for (const auto& v : r.variants) {
    std::map<int, std::vector<double>> per_class;
    for (const auto& s : v.seeds) {
      const std::string tag = v.name + "/seed" + std::to_string(s.seed);
      for (const auto& [cls, curve] : s.ap.per_class) {
        out << tag << ',' << cls << ',' << detail::fmt(curve.ap) << ',' << detail::fmt(s.ap.map) << '\n';
        per_class[cls].push_back(curve.ap);
      }
    }
    const double m = median(v.maps());
    for (const auto& [cls, aps] : per_class)
      out << v.name << "/median," << cls << ',' << detail::fmt(median(aps)) << ',' << detail::fmt(m) << '\n';
  }
  for (const auto& [name, d] : r.deltas) {
    const double m = median(d);
    out << name << "/delta/median,all," << detail::fmt(m) << ',' << detail::fmt(m) << '\n';
  }
  return out.str();
}

// Bar chart of median mAP per variant; sparse runs group point/joint bars by density.
inline std::string report_svg(const ExperimentReport& r) {
  struct Group {
    std::string label;
    std::vector<std::pair<std::string, double>> bars;
  };
  std::vector<Group> groups;
  for (const auto& v : r.variants) {
    const auto slash = v.name.find('/');
    const std::string g = slash == std::string::npos ? v.name : v.name.substr(0, slash);
    const std::string s = slash == std::string::npos ? "mAP" : v.name.substr(slash + 1);
    if (r.kind == ExperimentKind::Towers || groups.empty() || groups.back().label != g) groups.push_back({g, {}});
    groups.back().bars.emplace_back(s, median(v.maps()));
  }
  const char* palette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52"};
  std::map<std::string, int> series;
  for (const auto& g : groups)
    for (const auto& b : g.bars) series.emplace(b.first, static_cast<int>(series.size()));

  const int bar_w = 26, gap = 30, left = 50, top = 40, plot_h = 220;
  int width = left + 20;
  for (const auto& g : groups) width += static_cast<int>(g.bars.size()) * bar_w + gap;
  const int height = top + plot_h + 70;

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">" << experiment_name(r.kind)
    << ": median mAP@0.25</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double y = top + plot_h - plot_h * t / 4.0;
    o << "<line x1=\"" << left << "\" x2=\"" << width - 10 << "\" y1=\"" << y << "\" y2=\"" << y
      << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << t * 0.25 << "</text>\n";
  }
  int x = left + 10;
  for (const auto& g : groups) {
    const int gx = x;
    for (const auto& [name, val] : g.bars) {
      const double h = plot_h * std::clamp(val, 0.0, 1.0);
      o << "<rect x=\"" << x << "\" y=\"" << detail::fmt(top + plot_h - h) << "\" width=\"" << bar_w - 4
        << "\" height=\"" << detail::fmt(h) << "\" fill=\"" << palette[series[name] % 4] << "\"/>\n";
      o << "<text x=\"" << x + (bar_w - 4) / 2 << "\" y=\"" << detail::fmt(top + plot_h - h - 3)
        << "\" text-anchor=\"middle\" font-size=\"9\">" << detail::fmt(val).substr(0, 5) << "</text>\n";
      x += bar_w;
    }
    o << "<text x=\"" << (gx + x - 4) / 2 << "\" y=\"" << top + plot_h + 16 << "\" text-anchor=\"middle\">"
      << g.label << "</text>\n";
    x += gap;
  }
  if (series.size() > 1) {
    int lx = left;
    for (const auto& [name, idx] : series) {
      o << "<rect x=\"" << lx << "\" y=\"" << height - 22 << "\" width=\"10\" height=\"10\" fill=\""
        << palette[idx % 4] << "\"/>\n";
      o << "<text x=\"" << lx + 14 << "\" y=\"" << height - 13 << "\">" << name << "</text>\n";
      lx += 80;
    }
  }
  o << "</svg>\n";
  return o.str();
}

inline void write_report(const ExperimentReport& r, const std::string& dir) {
  std::ofstream csv(dir + "/metrics.csv", std::ios::binary);
  std::ofstream svg(dir + "/report.svg", std::ios::binary);
  if (!csv || !svg) throw FormatError("cannot write report files into '" + dir + "'");
  csv << metrics_csv(r);
  svg << report_svg(r);
}

}  // namespace imvote::eval
