#include "pstd/linalg.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "pstd/error.hpp"

namespace pstd {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kEmptySample: return "empty sample";
    case ErrorCode::kNotSymmetric: return "matrix not symmetric";
    case ErrorCode::kFactorizationFailed: return "factorization failed";
    case ErrorCode::kRankDeficient: return "rank deficient";
    case ErrorCode::kFilterDivergence: return "filter divergence";
    case ErrorCode::kDivergentValue: return "divergent value";
    case ErrorCode::kZeroProbability: return "zero probability";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kIo: return "i/o error";
  }
  return "unknown";
}

PinvResult pinv(const MatrixXd& a) {
  PinvResult out;
  out.inverse = MatrixXd::Zero(a.cols(), a.rows());
  if (a.size() == 0) return out;

  Eigen::BDCSVD<MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& s = svd.singularValues();
  const double cutoff =
      static_cast<double>(std::max(a.rows(), a.cols())) * s(0) * kPinvRelTol;
  VectorXd inv_s = VectorXd::Zero(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) {
      inv_s(i) = 1.0 / s(i);
      ++out.rank;
    }
  }
  out.truncated = out.rank < std::min(a.rows(), a.cols());
  out.inverse = svd.matrixV() * inv_s.asDiagonal() * svd.matrixU().transpose();
  return out;
}

RowVectorXd projected_right_solve(const RowVectorXd& rhs, const MatrixXd& a,
                                  const MatrixXd& p, bool* singular) {
  require(a.rows() == p.rows() && a.cols() == p.cols() &&
              rhs.size() == p.cols(),
          ErrorCode::kShapeMismatch, "projected_right_solve: shapes differ");
  const PinvResult p_inv = pinv(p);
  const MatrixXd system = a * p_inv.inverse;  // n x n
  const RowVectorXd target = rhs * p_inv.inverse;

  // x system = target  <=>  system^T x^T = target^T.
  Eigen::FullPivLU<MatrixXd> lu(system.transpose());
  bool truncated = p_inv.truncated;
  RowVectorXd x;
  if (lu.isInvertible()) {
    x = lu.solve(target.transpose()).transpose();
  } else {
    const PinvResult sys_inv = pinv(system);
    truncated = true;
    x = target * sys_inv.inverse;
  }
  if (singular) *singular = truncated;
  return x;
}

double spectral_radius(const MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  Eigen::EigenSolver<MatrixXd> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double max_abs(const MatrixXd& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

}  // namespace pstd
