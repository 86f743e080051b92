#pragma once

// Runs a validated experiment and writes per-seed CSVs, aggregate CSVs and a
// manifest; turns aggregates into long-format plot tables.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pstd/experiments/config.hpp"

namespace pstd::experiments {

const char* library_version();

struct RunOptions {
  std::filesystem::path out;
  unsigned workers = 1;
  std::optional<std::filesystem::path> cache_dir;
  std::ostream* log = nullptr;
};

struct RunReport {
  Index runs = 0;      // seed x learner (or seed x check) units
  Index failures = 0;  // units that failed; the run still completes
  std::vector<std::string> messages;
};

/// Output files: per_seed.csv, aggregate.csv, manifest.txt. Identical
/// configs produce byte-identical files.
RunReport run_experiment(const ExperimentConfig& config, const RunOptions& options);

/// Reads `results_dir` and writes plot_<panel>.csv tables with columns
/// series,x,mean,stderr. Returns the written files.
std::vector<std::filesystem::path> emit_plot_data(
    const std::filesystem::path& results_dir);

/// Mean and standard error of the mean; stderr is 0 for fewer than 2 values.
struct MeanStderr {
  double mean = 0.0;
  double standard_error = 0.0;
};
MeanStderr mean_stderr(const std::vector<double>& values);
double median(std::vector<double> values);

}  // namespace pstd::experiments
