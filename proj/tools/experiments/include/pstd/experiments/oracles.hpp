#pragma once

// Measurements against independent oracles. Each returns raw numbers; the
// pass/fail decision is left to the caller.

#include <cstdint>
#include <span>
#include <vector>

#include "pstd/covariance.hpp"
#include "pstd/experiments/config.hpp"

namespace pstd::experiments {

/// max |sum_o S_{H,o,H} - S_{H+,H}| / max(1, max |S_{H+,H}|).
double relative_partition_gap(const CovarianceSet& cs);

struct EquivalenceMeasure {
  double max_weight_gap = 0.0;     // |w_pstd - (U^T U) w_tpsr|
  double max_effective_gap = 0.0;  // same comparison on raw history features
  double max_partition_gap = 0.0;
  Index cases = 0;
};

/// PSTD weights against the TPSR Bellman solution on random systems, one
/// dataset per seed and every compressed dimension in `config.dims`.
EquivalenceMeasure measure_equivalence(const EquivalenceConfig& config,
                                       std::span<const std::uint64_t> seeds);

struct StationarityMeasure {
  double max_gradient_norm = 0.0;    // analytic gradient at V
  double max_fd_relative_error = 0.0;  // analytic vs central differences
  Index perturbation_violations = 0;   // loss(V + D) < loss(V)
  Index perturbations = 0;
  double max_partition_gap = 0.0;
};

/// Reduced-rank-regression optimality of V on the same random systems.
StationarityMeasure measure_stationarity(const EquivalenceConfig& config,
                                         std::span<const std::uint64_t> seeds,
                                         Index perturbations_per_case);

struct LstdChainMeasure {
  double analytic_error = 0.0;
  std::vector<double> small_sample_error;  // per seed, k = small
  std::vector<double> large_sample_error;  // per seed, k = large
  Index improved = 0;                      // seeds with large < small
  double max_partition_gap = 0.0;
};

/// LSTD on the fully observed four-state chain with one-hot state features.
LstdChainMeasure measure_lstd_chain(std::span<const std::uint64_t> seeds,
                                    Index small_samples, Index large_samples);

struct RankMeasure {
  VectorXd singular_values;
  double ratio = 0.0;  // sigma_4 / sigma_1
  double max_partition_gap = 0.0;
};

/// Spectrum of the analytic S_{T,H} of the RR-POMDP with windows of 5.
RankMeasure measure_rr_pomdp_rank();

struct FilterMeasure {
  double max_prediction_error = 0.0;
  Index predictions = 0;
  double max_partition_gap = 0.0;
};

/// TPSR (analytic covariances, dimension 3) against the exact belief filter.
FilterMeasure measure_tpsr_filter(std::span<const std::uint64_t> seeds,
                                  Index steps);

}  // namespace pstd::experiments
