// Command-line front end: bench, features, analyze, report.
//
// Exit codes: 0 success, 1 partial failure or runtime error, 2 configuration error.

#include <iostream>

#include <CLI11.hpp>

#include "hpoela/pipeline.hpp"

namespace {

int exit_code_for(const hpoela::Error& e) {
  switch (e.kind()) {
    case hpoela::ErrorKind::Config:
    case hpoela::ErrorKind::Schema: return 2;
    default: return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  namespace pl = hpoela::pipeline;
  CLI::App app{"Landscape analysis and benchmarking of black-box optimization problems"};
  app.require_subcommand(1);

  std::string config_path;
  int workers = 0;
  bool resume = false;
  std::size_t limit = 0;
  auto* bench = app.add_subcommand("bench", "Run every (problem, optimizer, replication) cell");
  bench->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  bench->add_option("--workers", workers, "Worker threads (overrides the config)")->check(CLI::PositiveNumber);
  bench->add_flag("--resume", resume, "Continue an existing store, skipping completed cells");
  bench->add_option("--limit", limit, "Stop after this many new cells");

  auto* features = app.add_subcommand("features", "Compute the ELA feature matrix");
  features->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  features->add_option("--workers", workers, "Worker threads (overrides the config)")->check(CLI::PositiveNumber);

  std::string store, feature_csv, out;
  auto* analyze = app.add_subcommand("analyze", "Statistics and landscape analysis report");
  analyze->add_option("--store", store, "Result store directory")->required();
  analyze->add_option("--features", feature_csv, "Feature matrix CSV");
  analyze->add_option("--out", out, "Report directory (default <store>/report)");

  bool svg = false;
  auto* report = app.add_subcommand("report", "Render plots from an analyzed store");
  report->add_option("--store", store, "Result store directory")->required();
  report->add_flag("--svg", svg, "Write SVG plots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (bench->parsed()) {
      const auto cfg = pl::load_config(config_path);
      pl::BenchOptions opts;
      opts.resume = resume;
      opts.limit = limit;
      if (workers > 0) opts.workers = workers;
      const auto s = pl::cmd_bench(cfg, opts);
      std::cout << "cells " << s.total << ", skipped " << s.skipped << ", ran " << s.ran << ", failed " << s.failed
                << ", evaluations " << s.evaluations << "\n";
      return s.failed > 0 ? 1 : 0;
    }
    if (features->parsed()) {
      const auto cfg = pl::load_config(config_path);
      const auto s = pl::cmd_features(cfg, workers > 0 ? std::optional<int>(workers) : std::nullopt);
      std::cout << "features: " << s.rows << " rows, " << s.excluded << " excluded -> " << s.csv.string() << "\n";
      return 0;
    }
    if (analyze->parsed()) {
      const auto s = pl::cmd_analyze({store, feature_csv, out});
      std::cout << "report written to " << s.out.string() << "\n";
      return 0;
    }
    if (report->parsed()) {
      const auto n = pl::cmd_report(store, svg);
      std::cout << n << " plots written\n";
      return 0;
    }
  } catch (const hpoela::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
