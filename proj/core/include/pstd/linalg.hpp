#pragma once

// Small dense linear-algebra helpers shared by the learners and the TPSR code.

#include <Eigen/Dense>

namespace pstd {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

/// Relative cutoff for treating a singular value as zero: sigma < max(rows, cols)
/// * sigma_max * kPinvRelTol.
inline constexpr double kPinvRelTol = 1e-12;

struct PinvResult {
  MatrixXd inverse;
  Index rank = 0;
  bool truncated = false;  // at least one singular value was dropped
};

PinvResult pinv(const MatrixXd& a);

/// Solves x^T a p^+ = rhs p^+ for x, i.e. returns rhs p^+ (a p^+)^{-1}.
///
/// `a` and `p` are n x d with p of full row rank; the result is the unique
/// solution of the Bellman system projected onto the row space of `p`.
/// Falls back to a pseudo-inverse of the n x n system when it is singular.
RowVectorXd projected_right_solve(const RowVectorXd& rhs, const MatrixXd& a,
                                  const MatrixXd& p, bool* singular = nullptr);

double spectral_radius(const MatrixXd& a);

double max_abs(const MatrixXd& a);

}  // namespace pstd
