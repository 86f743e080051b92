#pragma once

// Policy iteration on the 100-day early-exercise contract, against the
// exercise-now and best-threshold baselines.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pstd/experiments/config.hpp"
#include "pstd/stopping.hpp"

namespace pstd::experiments {

struct PricingSeries {
  LearnerKind kind = LearnerKind::kPstd;
  std::vector<IterationResult> iterations;
  std::string error;  // empty on success
};

struct PricingSeedResult {
  std::uint64_t seed = 0;
  std::string error;  // baseline failure; series may be incomplete
  PolicyEvaluation stop_now;
  ThresholdChoice threshold;
  PolicyEvaluation threshold_evaluation;
  std::vector<PricingSeries> learners;
  bool ok() const;
};

/// Evaluation paths share one seed per training seed, so every policy of a
/// seed is scored on the same market draws.
PricingSeedResult run_pricing_seed(const PricingConfig& config,
                                   std::uint64_t seed,
                                   unsigned evaluation_workers = 1);

std::vector<PricingSeedResult> run_pricing(const PricingConfig& config,
                                           std::span<const std::uint64_t> seeds,
                                           unsigned workers);

}  // namespace pstd::experiments
