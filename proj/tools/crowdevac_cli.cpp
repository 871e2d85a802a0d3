// Command-line front end: run, sweep, summarize, validate.
#if __has_include(<CLI/CLI.hpp>)
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "crowdevac/config.hpp"
#include "crowdevac/experiment.hpp"

namespace {

using namespace crowdevac;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t parallelism = 1;
  std::optional<std::size_t> snapshots;
  std::vector<std::string> overrides;
};

// One line on stderr, key=value fields, stable enough to grep.
void report_error(const std::string& kind, const std::string& message) {
  std::string flat = message;
  for (char& ch : flat)
    if (ch == '\n') ch = ' ';
  std::fprintf(stderr, "error kind=%s message=\"%s\"\n", kind.c_str(), flat.c_str());
}

ExperimentSpec load_spec(const Options& o) {
  std::string text;
  if (!o.config_path.empty()) text = detail::read_text(o.config_path);
  std::vector<std::string> overrides = o.overrides;
  if (o.seed) {
    overrides.push_back("seed = " + std::to_string(*o.seed));
    overrides.push_back("sweep.base_seed = " + std::to_string(*o.seed));
  }
  ExperimentSpec spec = parse_experiment(text, overrides);
  if (!o.out.empty()) spec.output_dir = o.out;
  if (o.snapshots) spec.snapshot_every = *o.snapshots;
  return spec;
}

int cmd_run(const Options& o) {
  const ExperimentSpec spec = load_spec(o);
  const SimConfig& cfg = spec.base;
  const fs::path out(spec.output_dir);
  fs::create_directories(out);
  const RunMetrics m = run_with_snapshots(cfg, spec.snapshot_every, out / "snapshots");
  const fs::path metrics = out / ("run-" + std::to_string(cfg.seed) + ".csv");
  write_metrics(m.rows, metrics);
  detail::write_text(out / ("run-" + std::to_string(cfg.seed) + ".cfg"), dump_config(cfg));
  const MetricsRow& last = m.rows.back();
  std::printf("metrics=%s iterations=%zu evac_rate=%s density_err=%s\n", metrics.string().c_str(),
              m.rows.size() - 1, format_number(last.evacuation_rate).c_str(),
              format_number(last.density_error).c_str());
  return 0;
}

int cmd_sweep(const Options& o) {
  const ExperimentSpec spec = load_spec(o);
  fs::create_directories(spec.output_dir);
  detail::write_text(fs::path(spec.output_dir) / "spec.cfg", dump_config(spec));
  const BatchResult r = run_batch(spec, o.parallelism);
  std::printf("summary=%s cells=%zu runs=%zu failures=%zu\n",
              (fs::path(spec.output_dir) / "summary.csv").string().c_str(), r.summary.size(), r.runs,
              r.failures);
  return 0;
}

int cmd_summarize(const Options& o, const std::string& dir_arg) {
  const std::string dir = !dir_arg.empty() ? dir_arg : (!o.out.empty() ? o.out : "out");
  const auto rows = summarize_directory(dir);
  write_summary(rows, fs::path(dir) / "summary.csv");
  std::fputs(format_summary(rows).c_str(), stdout);
  return 0;
}

int cmd_validate(const Options& o) {
  const ExperimentSpec spec = load_spec(o);
  if (!spec.base.potential.is_typical()) {
    std::fprintf(stderr, "warning: interaction potential is not short-range repulsive\n");
  }
  std::fputs(dump_config(spec).c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robot-guided crowd evacuation simulator"};
  app.require_subcommand(1);
  Options o;
  std::string summarize_dir;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "key = value configuration file");
    sub->add_option("--seed", o.seed, "seed (run) or base seed (sweep)");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--set", o.overrides, "override one key, key=value (repeatable)")->take_all();
  };
  auto* run = app.add_subcommand("run", "single run: metrics CSV and optional snapshots");
  common(run);
  run->add_option("--snapshots", o.snapshots, "snapshot every k iterations (0 = off)");
  auto* sweep = app.add_subcommand("sweep", "batch sweep: per-run metrics and summary.csv");
  common(sweep);
  sweep->add_option("--parallelism", o.parallelism, "worker threads")->check(CLI::PositiveNumber);
  sweep->add_option("--snapshots", o.snapshots, "snapshot every k iterations (0 = off)");
  auto* summarize = app.add_subcommand("summarize", "recompute summary.csv from stored runs");
  summarize->add_option("dir", summarize_dir, "sweep output directory");
  summarize->add_option("--out", o.out, "sweep output directory");
  auto* validate = app.add_subcommand("validate", "parse and print the effective configuration");
  common(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return 64;
  }

  try {
    if (*run) return cmd_run(o);
    if (*sweep) return cmd_sweep(o);
    if (*summarize) return cmd_summarize(o, summarize_dir);
    if (*validate) return cmd_validate(o);
  } catch (const ParseError& e) {
    report_error(e.kind(), e.what());
    return 65;
  } catch (const IoError& e) {
    report_error(e.kind(), e.what());
    return 74;
  } catch (const Error& e) {
    report_error(e.kind(), e.what());
    return 70;
  } catch (const fs::filesystem_error& e) {
    report_error("io", e.what());
    return 74;
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return 70;
  }
  return 0;
}
