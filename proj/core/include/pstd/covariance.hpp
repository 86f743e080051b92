#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "pstd/features.hpp"
#include "pstd/linalg.hpp"

namespace pstd {

/// Aligned transition samples. Column t of every matrix refers to the same
/// split point; `next_*` hold the successor split point's features (zero
/// columns for terminal transitions). `symbol[t]` is the observation that
/// moves split t to split t + 1.
struct TransitionSet {
  MatrixXd history;
  MatrixXd next_history;
  MatrixXd future;
  MatrixXd next_future;  // may be empty (no S_{T,o,H})
  VectorXd reward;
  std::vector<int> symbol;
  std::vector<Index> indices;

  Index samples() const { return history.cols(); }
};

/// Keeps split points whose successor is also retained and pairs them up.
/// `rewards` and `observations` are indexed by trajectory step; an empty
/// `observations` span means a single implicit symbol 0.
TransitionSet make_transitions(const FeatureMatrix& histories,
                               const FeatureMatrix& futures,
                               std::span<const double> rewards,
                               std::span<const int> observations = {});

struct CovarianceSet {
  MatrixXd hh;        // S_{H,H}
  MatrixXd th;        // S_{T,H}
  MatrixXd tt;        // S_{T,T}
  RowVectorXd rh;     // S_{R,H}
  MatrixXd hplus_h;   // S_{H+,H}
  std::map<int, MatrixXd> h_o_h;  // S_{H,o,H}
  std::map<int, MatrixXd> t_o_h;  // S_{T,o,H}; empty when not available
  VectorXd h_mean;
  VectorXd t_mean;
  Index samples = 0;  // 0 marks population (analytic) covariances

  Index history_dim() const { return hh.rows(); }
  Index future_dim() const { return th.rows(); }
};

/// (1/k) X Y^T for feature matrices with k columns each.
MatrixXd cov(const MatrixXd& x, const MatrixXd& y);

/// (1/p) sum over retained adjacent pairs (t, t+1) of phi_{t+1} phi_t^T.
MatrixXd shifted_cov(const FeatureMatrix& h);

/// For each symbol o: (1/k) sum_t a_t 1[symbol_t = o] h_t^T, one shared
/// divisor k so the partition over symbols sums to cov(a, h).
std::map<int, MatrixXd> indicator_cov(const MatrixXd& a, const MatrixXd& h,
                                      std::span<const int> symbols);

CovarianceSet build_covariance_set(const TransitionSet& samples);

CovarianceSet build_covariance_set(const FeatureMatrix& histories,
                                   const FeatureMatrix& futures,
                                   std::span<const double> rewards,
                                   std::span<const int> observations = {});

/// max |sum_o S_{H,o,H} - S_{H+,H}|.
double partition_gap(const CovarianceSet& cs);

// One matrix file per member (hh.mat, th.mat, ..., h_o_h.<o>.mat) plus a
// meta file with the sample count.
void save_covariance_set(const CovarianceSet& cs,
                         const std::filesystem::path& dir);
CovarianceSet load_covariance_set(const std::filesystem::path& dir);

}  // namespace pstd
