#include <cstdlib>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "pstd/experiments/config.hpp"
#include "pstd/experiments/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace pstd::experiments;
  CLI::App app{"Seeded PSTD experiment runner"};
  app.set_version_flag("--version", std::string(library_version()));
  app.require_subcommand(1);

  std::string config_path, out_dir;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());

  auto* run = app.add_subcommand("run", "Run an experiment and write results");
  run->add_option("--config", config_path, "Experiment config file")->required();
  run->add_option("--out", out_dir, "Output directory (overrides output_dir)");
  run->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);

  auto* validate_cmd =
      app.add_subcommand("validate-config", "Check a config file and exit");
  validate_cmd->add_option("--config", config_path, "Experiment config file")
      ->required();

  auto* plot = app.add_subcommand("emit-plot-data",
                                  "Write long-format plot tables from results");
  plot->add_option("--out", out_dir, "Results directory of a previous run")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*validate_cmd) {
      const ExperimentConfig c = load_config(config_path);
      std::cout << config_path << ": ok (" << to_string(c.id) << ", "
                << c.seeds.size() << " seeds, hash fnv1a64:"
                << hex64(fnv1a(c.canonical)) << ")\n";
      return kExitOk;
    }
    if (*plot) {
      for (const auto& file : emit_plot_data(out_dir)) {
        std::cout << file.string() << '\n';
      }
      return kExitOk;
    }

    const ExperimentConfig c = load_config(config_path);
    RunOptions options;
    if (!out_dir.empty()) {
      options.out = out_dir;
    } else if (c.output_dir) {
      options.out = *c.output_dir;
    } else {
      std::cerr << config_path
                << ": no output directory (set output_dir or pass --out)\n";
      return kExitConfig;
    }
    options.workers = workers;
    if (const char* cache = std::getenv("PSTD_CACHE_DIR"); cache && *cache) {
      options.cache_dir = cache;
    }
    options.log = &std::cerr;
    const RunReport report = run_experiment(c, options);
    for (const auto& m : report.messages) std::cerr << "failed: " << m << '\n';
    std::cerr << report.runs - report.failures << "/" << report.runs
              << " runs succeeded; results in " << options.out.string() << '\n';
    return report.failures == 0 ? kExitOk : kExitPartial;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}
