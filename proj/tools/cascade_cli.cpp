#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cascade/error.hpp"
#include "cascade/runner.hpp"
#include "cascade/scenario.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitSolver = 2;

fs::path examples_dir() {
  if (const char* env = std::getenv("CASCADE_CONFIG_DIR")) return env;
  return CASCADE_CONFIG_DIR;
}

int list_examples() {
  std::vector<fs::path> files;
  if (fs::is_directory(examples_dir()))
    for (const auto& e : fs::directory_iterator(examples_dir()))
      if (e.path().extension() == ".yaml") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::string desc;
    try {
      desc = cascade::load_scenario(f.string()).description;
    } catch (const cascade::Error& e) {
      desc = std::string("(invalid: ") + e.what() + ")";
    }
    std::cout << f.stem().string() << "\t" << f.string() << "\t" << desc << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cascade Kerr chain simulator"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  unsigned jobs = 0;
  long long seed = -1;
  bool render = false;

  auto* run = app.add_subcommand("run", "Run a scenario and write results");
  run->add_option("config", config, "Scenario file")->required();
  run->add_option("--out", out_dir, "Output directory (overrides output_dir)");
  run->add_option("--jobs", jobs, "Parallel grid points (0 = all cores)");
  run->add_option("--seed", seed, "Seed override")->check(CLI::NonNegativeNumber);
  run->add_flag("--render", render, "Write PPM heatmaps");

  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("config", config, "Scenario file")->required();

  auto* list = app.add_subcommand("list-examples", "List shipped scenario files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  if (list->parsed()) return list_examples();

  cascade::Scenario scenario;
  try {
    scenario = cascade::load_scenario(config);
  } catch (const cascade::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (validate->parsed()) {
    std::cout << "ok: " << config << " (" << cascade::grid_points(scenario).size() << " grid points)\n";
    return kExitOk;
  }

  cascade::RunOptions opts;
  if (!out_dir.empty()) opts.out_dir = out_dir;
  if (seed >= 0) opts.seed = static_cast<std::uint64_t>(seed);
  opts.jobs = jobs;
  opts.render = render;
  try {
    const auto report = cascade::run_scenario(scenario, opts);
    std::cout << "rows " << report.rows << " (ok " << report.ok_rows << ", failed " << report.failed_rows
              << ", resumed " << report.resumed_rows << ") in " << report.wall_seconds << " s\n"
              << report.table_path << "\n" << report.manifest_path << "\n";
    return report.exit_code;
  } catch (const cascade::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == cascade::ErrorCode::Config ? kExitConfig : kExitSolver;
  }
}
