#pragma once

// Value-function accuracy on the reduced-rank POMDP with RBF features.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pstd/experiments/config.hpp"

namespace pstd::experiments {

struct LearnerOutcome {
  LearnerKind kind = LearnerKind::kLstd;
  bool ok = false;
  double mse = 0.0;  // against the exact belief value of each history
  std::string error;
};

struct RrPomdpSeedResult {
  std::uint64_t seed = 0;
  Index samples = 0;
  double partition_gap = 0.0;  // relative
  bool cache_hit = false;
  std::string error;  // dataset-level failure; `learners` is then empty
  std::vector<LearnerOutcome> learners;
  bool ok() const;
};

/// One seed: simulate, sample RBF centers, build covariances (through the
/// cache when `cache_dir` is set), fit every learner and score it.
RrPomdpSeedResult run_rrpomdp_seed(
    const RrPomdpConfig& config, std::uint64_t seed,
    const std::optional<std::filesystem::path>& cache_dir = std::nullopt);

/// All seeds on a worker pool; results are ordered like `seeds`.
std::vector<RrPomdpSeedResult> run_rrpomdp(
    const RrPomdpConfig& config, std::span<const std::uint64_t> seeds,
    unsigned workers,
    const std::optional<std::filesystem::path>& cache_dir = std::nullopt);

}  // namespace pstd::experiments
