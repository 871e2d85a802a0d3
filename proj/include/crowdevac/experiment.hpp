#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "crowdevac/config.hpp"
#include "crowdevac/rng.hpp"
#include "crowdevac/simulator.hpp"

namespace crowdevac {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Text formats. All numbers use 9 significant digits so files are stable
// across runs and platforms.

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline const char* metrics_header() {
  return "t,density_err,velocity_err,force_err,weight_norm,lyapunov,evac_rate,mean_speed";
}

inline std::string format_metrics(const std::vector<MetricsRow>& rows) {
  std::string out = metrics_header();
  out += '\n';
  for (const auto& r : rows) {
    for (double v : {r.time, r.density_error, r.velocity_error, r.force_error, r.weight_norm,
                     r.lyapunov, r.evacuation_rate}) {
      out += format_number(v);
      out += ',';
    }
    out += format_number(r.mean_speed);
    out += '\n';
  }
  return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  f.flush();
  if (!f) throw IoError("write failed for " + path.string());
}

inline std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace detail

inline std::vector<MetricsRow> parse_metrics(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != metrics_header()) {
    throw ParseError(1, "", "missing or unexpected metrics header");
  }
  std::vector<MetricsRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 8) throw ParseError(line_no, "", "expected 8 columns");
    double v[8];
    try {
      for (int k = 0; k < 8; ++k) v[k] = detail::parse_double(cells[k]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(line_no, "", e.what());
    }
    rows.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]});
  }
  return rows;
}

inline void write_metrics(const std::vector<MetricsRow>& rows, const fs::path& path) {
  detail::write_text(path, format_metrics(rows));
}

inline std::vector<MetricsRow> read_metrics(const fs::path& path) {
  return parse_metrics(detail::read_text(path));
}

// ---------------------------------------------------------------------------
// Summaries.

/// Quantile with midpoint interpolation: at fractional rank q (n - 1) take
/// the mean of the two neighbouring order statistics.
inline double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return 0.5 * (values[lo] + values[hi]);
}

struct CellKey {
  std::size_t humans = 0;
  std::size_t robots = 0;
  ObstacleRegime regime = ObstacleRegime::kNone;

  auto operator<=>(const CellKey&) const = default;
};

struct SummaryRow {
  CellKey cell;
  std::size_t replications = 0;  // successful runs the statistics cover
  std::size_t failures = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;
  double density_error_median = 0;

  bool operator==(const SummaryRow&) const = default;
};

/// Final-state outcome of one replication; `failed` runs carry no numbers.
struct RunOutcome {
  bool failed = false;
  double evacuation_rate = 0.0;
  double density_error = 0.0;
  std::string error;
};

inline SummaryRow summarize_cell(const CellKey& cell, const std::vector<RunOutcome>& outcomes) {
  SummaryRow row;
  row.cell = cell;
  std::vector<double> rates, errs;
  for (const auto& o : outcomes) {
    if (o.failed) {
      ++row.failures;
      continue;
    }
    rates.push_back(o.evacuation_rate);
    errs.push_back(o.density_error);
  }
  row.replications = rates.size();
  if (rates.empty()) {
    const double nan = std::nan("");
    row.min = row.q1 = row.median = row.q3 = row.max = row.mean = row.density_error_median = nan;
    return row;
  }
  row.min = *std::min_element(rates.begin(), rates.end());
  row.max = *std::max_element(rates.begin(), rates.end());
  row.q1 = quantile(rates, 0.25);
  row.median = quantile(rates, 0.5);
  row.q3 = quantile(rates, 0.75);
  double sum = 0.0;
  for (double r : rates) sum += r;
  row.mean = sum / static_cast<double>(rates.size());
  row.density_error_median = quantile(errs, 0.5);
  return row;
}

inline const char* summary_header() {
  return "humans,robots,regime,replications,failures,min,q1,median,q3,max,mean,density_err_median";
}

inline std::string format_summary(const std::vector<SummaryRow>& rows) {
  std::string out = summary_header();
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.cell.humans) + ',' + std::to_string(r.cell.robots) + ',' +
           std::string(to_string(r.cell.regime)) + ',' + std::to_string(r.replications) + ',' +
           std::to_string(r.failures);
    for (double v : {r.min, r.q1, r.median, r.q3, r.max, r.mean, r.density_error_median}) {
      out += ',';
      out += format_number(v);
    }
    out += '\n';
  }
  return out;
}

inline std::vector<SummaryRow> parse_summary(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != summary_header()) {
    throw ParseError(1, "", "missing or unexpected summary header");
  }
  std::vector<SummaryRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c = detail::split_csv_line(line);
    if (c.size() != 12) throw ParseError(line_no, "", "expected 12 columns");
    try {
      SummaryRow r;
      r.cell = {detail::parse_unsigned(c[0]), detail::parse_unsigned(c[1]),
                detail::parse_regime(c[2])};
      r.replications = detail::parse_unsigned(c[3]);
      r.failures = detail::parse_unsigned(c[4]);
      double* fields[] = {&r.min, &r.q1, &r.median, &r.q3, &r.max, &r.mean, &r.density_error_median};
      for (int k = 0; k < 7; ++k) *fields[k] = detail::parse_double(c[5 + k]);
      rows.push_back(r);
    } catch (const std::invalid_argument& e) {
      throw ParseError(line_no, "", e.what());
    }
  }
  return rows;
}

inline void write_summary(const std::vector<SummaryRow>& rows, const fs::path& path) {
  detail::write_text(path, format_summary(rows));
}

// ---------------------------------------------------------------------------
// Snapshots: binary PPM (P6), 400x400 pixels, x to the right and y up.
// Density heatmap scaled by its maximum, humans as dark dots, robots as red
// discs with a direction stroke, obstacles as grey square outlines.

struct SnapshotStyle {
  int size = 400;
};

namespace detail {

struct Canvas {
  int w, h;
  std::vector<unsigned char> px;

  Canvas(int w_, int h_) : w(w_), h(h_), px(static_cast<std::size_t>(w_) * h_ * 3, 255) {}

  void set(int x, int y, unsigned char r, unsigned char g, unsigned char b) {
    if (x < 0 || y < 0 || x >= w || y >= h) return;
    auto* p = &px[(static_cast<std::size_t>(y) * w + x) * 3];
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }

  void disc(double cx, double cy, double radius, unsigned char r, unsigned char g, unsigned char b) {
    const int x0 = static_cast<int>(std::floor(cx - radius)), x1 = static_cast<int>(std::ceil(cx + radius));
    const int y0 = static_cast<int>(std::floor(cy - radius)), y1 = static_cast<int>(std::ceil(cy + radius));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= radius * radius) set(x, y, r, g, b);
  }

  void line(double xa, double ya, double xb, double yb, unsigned char r, unsigned char g, unsigned char b) {
    const int steps = static_cast<int>(std::ceil(std::max(std::abs(xb - xa), std::abs(yb - ya)))) + 1;
    for (int k = 0; k <= steps; ++k) {
      const double s = static_cast<double>(k) / steps;
      set(static_cast<int>(std::lround(xa + s * (xb - xa))), static_cast<int>(std::lround(ya + s * (yb - ya))), r, g, b);
    }
  }
};

}  // namespace detail

/// Renders the state as a PPM image. `density` is the field to shade; the
/// cached estimate is used when none is given.
inline std::string render_snapshot(const SimState& s, const Domain& domain,
                                   const ScalarField* density = nullptr,
                                   const SnapshotStyle& style = {}) {
  const int n = style.size;
  detail::Canvas c(n, n);
  const Vec2 ext = domain.extent();
  auto to_px = [&](const Vec2& p) {
    return Vec2((p.x() - domain.lower.x()) / ext.x() * (n - 1),
                (1.0 - (p.y() - domain.lower.y()) / ext.y()) * (n - 1));
  };

  const ScalarField* rho = density ? density : (s.cache ? &s.cache->density : nullptr);
  if (rho) {
    const double peak = rho->values().maxCoeff();
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        const Vec2 p(domain.lower.x() + ext.x() * x / (n - 1),
                     domain.lower.y() + ext.y() * (1.0 - static_cast<double>(y) / (n - 1)));
        const double v = peak > 0.0 ? std::clamp(sample(*rho, p) / peak, 0.0, 1.0) : 0.0;
        // white -> blue ramp
        const auto fade = static_cast<unsigned char>(std::lround(255.0 * (1.0 - 0.75 * v)));
        c.set(x, y, fade, fade, 255);
      }
    }
  }

  for (std::size_t k = 0; k < s.obstacles.centers.size(); ++k) {
    const Vec2& center = s.obstacles.centers[k];
    const Vec2 half = s.obstacles.obstacles[k].half_extent;
    const Vec2 lo = to_px(center + Vec2(-half.x(), half.y()));
    const Vec2 hi = to_px(center + Vec2(half.x(), -half.y()));
    c.line(lo.x(), lo.y(), hi.x(), lo.y(), 90, 90, 90);
    c.line(hi.x(), lo.y(), hi.x(), hi.y(), 90, 90, 90);
    c.line(hi.x(), hi.y(), lo.x(), hi.y(), 90, 90, 90);
    c.line(lo.x(), hi.y(), lo.x(), lo.y(), 90, 90, 90);
  }
  for (const Vec2& x : s.humans.positions) {
    const Vec2 p = to_px(x);
    c.disc(p.x(), p.y(), 1.5, 20, 20, 20);
  }
  for (std::size_t i = 0; i < s.robots.size(); ++i) {
    const Vec2 p = to_px(s.robots.positions[i]);
    const double th = s.robots.directions[i];
    c.disc(p.x(), p.y(), 4.0, 210, 30, 30);
    c.line(p.x(), p.y(), p.x() + 16.0 * std::cos(th), p.y() - 16.0 * std::sin(th), 210, 30, 30);
  }

  std::string out = "P6\n" + std::to_string(n) + " " + std::to_string(n) + "\n255\n";
  out.append(reinterpret_cast<const char*>(c.px.data()), c.px.size());
  return out;
}

inline fs::path snapshot_path(const fs::path& dir, std::uint64_t seed, std::size_t iteration) {
  return dir / ("run-" + std::to_string(seed) + "-t" + std::to_string(iteration) + ".ppm");
}

inline void emit_snapshot(const SimState& s, const Domain& domain, const fs::path& path,
                          const ScalarField* density = nullptr) {
  detail::write_text(path, render_snapshot(s, domain, density));
}

// ---------------------------------------------------------------------------
// Single runs and batches.

/// Runs one configuration, writing snapshots every `snapshot_every`
/// iterations into `snapshot_dir` (0 = none).
inline RunMetrics run_with_snapshots(const SimConfig& config, std::size_t snapshot_every,
                                     const fs::path& snapshot_dir) {
  const Simulator sim(config);
  if (snapshot_every == 0) return sim.run();
  fs::create_directories(snapshot_dir);
  return sim.run([&](const SimState& s, const Evaluation& ev) {
    if (s.iteration % snapshot_every == 0) {
      emit_snapshot(s, config.domain, snapshot_path(snapshot_dir, config.seed, s.iteration),
                    &ev.fields.density);
    }
  });
}

/// Seed of replication r in a cell. Derived from the cell contents, not its
/// position in the sweep, so a cell can be re-run on its own.
inline std::uint64_t replication_seed(std::uint64_t base, const CellKey& cell, std::size_t r) {
  std::uint64_t h = mix64(0x6a09e667f3bcc909ULL ^ cell.humans);
  h = mix64(h ^ cell.robots);
  h = mix64(h ^ static_cast<std::uint64_t>(cell.regime));
  h = mix64(h ^ r);
  return base ^ h;
}

inline std::string run_stem(const CellKey& cell, std::size_t r) {
  return "N" + std::to_string(cell.humans) + "_n" + std::to_string(cell.robots) + "_" +
         std::string(to_string(cell.regime)) + "_r" + std::to_string(r);
}

inline std::vector<CellKey> sweep_cells(const ExperimentSpec& spec) {
  std::vector<CellKey> cells;
  for (auto regime : spec.regimes)
    for (auto humans : spec.human_counts)
      for (auto robots : spec.robot_counts) cells.push_back({humans, robots, regime});
  return cells;
}

struct BatchResult {
  std::vector<SummaryRow> summary;
  std::size_t runs = 0;
  std::size_t failures = 0;
};

/// Runs every (cell, replication) of the sweep on up to `parallelism`
/// worker threads. Per-run metrics go to <out>/runs/<stem>.csv (or
/// <stem>.failed with the error line), the summary to <out>/summary.csv.
/// Output bytes do not depend on the worker count.
inline BatchResult run_batch(const ExperimentSpec& spec, std::size_t parallelism) {
  spec.validate();
  const fs::path out(spec.output_dir);
  const fs::path runs = out / "runs";
  const fs::path snaps = out / "snapshots";
  fs::create_directories(runs);

  struct Job {
    CellKey cell;
    std::size_t replication;
  };
  const auto cells = sweep_cells(spec);
  std::vector<Job> jobs;
  for (const auto& cell : cells)
    for (std::size_t r = 0; r < spec.replications; ++r) jobs.push_back({cell, r});

  std::vector<RunOutcome> outcomes(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex io_error_mutex;
  std::string io_error;

  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      const Job& job = jobs[k];
      SimConfig cfg = spec.base;
      cfg.humans = job.cell.humans;
      cfg.robots = job.cell.robots;
      cfg.regime = job.cell.regime;
      cfg.seed = replication_seed(spec.base_seed, job.cell, job.replication);
      const std::string stem = run_stem(job.cell, job.replication);
      RunOutcome& o = outcomes[k];
      try {
        try {
          const RunMetrics m = run_with_snapshots(cfg, spec.snapshot_every, snaps);
          o.evacuation_rate = m.rows.back().evacuation_rate;
          o.density_error = m.rows.back().density_error;
          write_metrics(m.rows, runs / (stem + ".csv"));
        } catch (const IoError&) {
          throw;
        } catch (const Error& e) {
          o.failed = true;
          o.error = e.kind() + ": " + e.what();
          detail::write_text(runs / (stem + ".failed"), o.error + "\n");
        }
      } catch (const std::exception& e) {
        std::lock_guard lock(io_error_mutex);
        if (io_error.empty()) io_error = e.what();
      }
    }
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(parallelism, jobs.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (!io_error.empty()) throw IoError(io_error);

  BatchResult result;
  result.runs = jobs.size();
  std::size_t k = 0;
  for (const auto& cell : cells) {
    std::vector<RunOutcome> group(outcomes.begin() + k, outcomes.begin() + k + spec.replications);
    k += spec.replications;
    result.summary.push_back(summarize_cell(cell, group));
    result.failures += result.summary.back().failures;
  }
  write_summary(result.summary, out / "summary.csv");
  return result;
}

/// Rebuilds the summary table from the per-run files of a sweep directory.
inline std::vector<SummaryRow> summarize_directory(const fs::path& dir) {
  const fs::path runs = fs::exists(dir / "runs") ? dir / "runs" : dir;
  if (!fs::is_directory(runs)) throw IoError("not a directory: " + runs.string());
  std::map<CellKey, std::vector<std::pair<std::size_t, RunOutcome>>> groups;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(runs)) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    const std::string ext = path.extension().string();
    if (ext != ".csv" && ext != ".failed") continue;
    unsigned long long humans = 0, robots = 0, rep = 0;
    char regime[16] = {};
    const std::string stem = path.stem().string();
    if (std::sscanf(stem.c_str(), "N%llu_n%llu_%15[a-z]_r%llu", &humans, &robots, regime, &rep) != 4) {
      continue;
    }
    CellKey cell{humans, robots, regime_from_string(regime)};
    RunOutcome o;
    if (ext == ".failed") {
      o.failed = true;
      o.error = detail::trim(detail::read_text(path));
    } else {
      const auto rows = read_metrics(path);
      if (rows.empty()) throw ParseError(2, "", "no rows in " + path.string());
      o.evacuation_rate = rows.back().evacuation_rate;
      o.density_error = rows.back().density_error;
    }
    groups[cell].emplace_back(rep, o);
  }
  if (groups.empty()) throw IoError("no run files found in " + runs.string());

  // Match the sweep's row order: regime, then humans, then robots.
  std::vector<std::pair<std::tuple<int, std::size_t, std::size_t>, CellKey>> order;
  for (const auto& [cell, _] : groups) {
    order.push_back({{static_cast<int>(cell.regime), cell.humans, cell.robots}, cell});
  }
  std::sort(order.begin(), order.end());
  std::vector<SummaryRow> rows;
  for (const auto& [_, cell] : order) {
    auto group = groups[cell];
    std::sort(group.begin(), group.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<RunOutcome> outcomes;
    for (auto& [rep, o] : group) outcomes.push_back(o);
    rows.push_back(summarize_cell(cell, outcomes));
  }
  return rows;
}

}  // namespace crowdevac
