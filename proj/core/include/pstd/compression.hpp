#pragma once

#include <iosfwd>
#include <vector>

#include "pstd/covariance.hpp"
#include "pstd/features.hpp"
#include "pstd/linalg.hpp"

namespace pstd {

struct CholeskyFactor {
  MatrixXd lower;
  double jitter = 0.0;  // absolute value added to the diagonal
};

/// Lower Cholesky factor of a symmetric PSD matrix. Tries jitter
/// {0, 1e-12, 1e-10, ..., 1e-4} x mean(diag(S)) and keeps the first that
/// factors with no collapsed pivot.
CholeskyFactor cholesky_lower(const MatrixXd& s);

/// B S^{-1} using a precomputed factor of S.
MatrixXd right_solve(const MatrixXd& b, const CholeskyFactor& factor);

struct Scaling {
  enum class Mode { kNone, kValueDirected, kCca };

  Mode mode = Mode::kNone;
  double factor = 1.0;
  std::vector<Index> reward_rows;

  static Scaling none() { return {}; }
  static Scaling value_directed(double factor, std::vector<Index> reward_rows);
  static Scaling cca() { return {Mode::kCca, 1.0, {}}; }
};

struct Subspace {
  MatrixXd u_hat;           // d_T x n, expressed in the scaled future space
  MatrixXd v_hat;           // n x d_H (empty until compression_operator)
  VectorXd singular_values; // retained, nonincreasing
  VectorXd spectrum;        // all singular values of the weighted covariance
  Scaling scaling;
  double jitter = 0.0;      // Cholesky jitter used for S_{H,H}
};

/// Row scaling of future features: non-reward rows are multiplied by
/// 1/sqrt(factor) so their variance drops by `factor`.
VectorXd value_directed_row_scale(Index future_dim, const Scaling& scaling);

FeatureMatrix value_directed_scale(FeatureMatrix futures,
                                   const std::vector<Index>& reward_rows,
                                   double factor);

/// Applies the future-side scaling of `scaling` to S_{T,H}. CCA needs S_{T,T}.
MatrixXd scale_future_cov(const MatrixXd& th, const Scaling& scaling,
                          const MatrixXd* tt = nullptr);

/// Truncated SVD of scale(S_{T,H}) L_H^{-T}; u_hat = U D^{1/2}.
///
/// Each left singular vector is sign-normalized so that its largest-magnitude
/// entry (lowest index on ties) is positive. Throws kRankDeficient if a
/// retained singular value is below 1e-12 of the largest.
Subspace predictive_subspace(const MatrixXd& th, const MatrixXd& hh, Index dim,
                             const Scaling& scaling = Scaling::none(),
                             const MatrixXd* tt = nullptr);

/// Least-squares compression through the bottleneck u_hat:
/// V = (U^T U)^{-1} U^T S_{T,H} S_{H,H}^{-1}.
MatrixXd compression_operator(const MatrixXd& u_hat, const MatrixXd& th,
                              const MatrixXd& hh);

/// predictive_subspace followed by compression_operator on the same scaled
/// covariance.
Subspace fit_subspace(const CovarianceSet& cs, Index dim,
                      const Scaling& scaling = Scaling::none());

/// Rescales every future-side matrix of `cs` by diag(row_scale).
CovarianceSet scale_future(const CovarianceSet& cs, const VectorXd& row_scale);

/// CSV with header "index,singular_value".
void write_spectrum_csv(std::ostream& out, const VectorXd& spectrum);

}  // namespace pstd
