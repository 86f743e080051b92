#include "pstd/compression.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "pstd/error.hpp"

namespace pstd {

namespace {

constexpr double kSymmetryTol = 1e-8;
constexpr double kMinPivotRatio = 1e-15;
constexpr double kRankRatio = 1e-12;
constexpr double kJitterSchedule[] = {0.0, 1e-12, 1e-10, 1e-8, 1e-6, 1e-4};

void check_symmetric(const MatrixXd& s) {
  require(s.rows() == s.cols(), ErrorCode::kShapeMismatch,
          "cholesky: matrix not square");
  require(s.allFinite(), ErrorCode::kInvalidArgument,
          "cholesky: non-finite entries");
  const double scale = std::max(1.0, max_abs(s));
  require(max_abs(s - s.transpose()) <= kSymmetryTol * scale,
          ErrorCode::kNotSymmetric, "cholesky: matrix not symmetric");
}

// L^{-1} x for a lower factor.
MatrixXd lower_inverse_apply(const CholeskyFactor& f, const MatrixXd& x) {
  return f.lower.triangularView<Eigen::Lower>().solve(x);
}

}  // namespace

CholeskyFactor cholesky_lower(const MatrixXd& s) {
  check_symmetric(s);
  require(s.rows() >= 1, ErrorCode::kEmptySample, "cholesky: empty matrix");
  const MatrixXd sym = 0.5 * (s + s.transpose());
  const double mean_diag = sym.diagonal().mean();
  require(mean_diag > 0.0, ErrorCode::kFactorizationFailed,
          "cholesky: matrix has no positive diagonal mass");
  for (double rel : kJitterSchedule) {
    const double jitter = rel * mean_diag;
    MatrixXd shifted = sym;
    shifted.diagonal().array() += jitter;
    Eigen::LLT<MatrixXd> llt(shifted);
    if (llt.info() != Eigen::Success) continue;
    MatrixXd lower = llt.matrixL();
    const double min_pivot = lower.diagonal().array().square().minCoeff();
    if (!(min_pivot > kMinPivotRatio * mean_diag)) continue;
    return {std::move(lower), jitter};
  }
  fail(ErrorCode::kFactorizationFailed,
       "cholesky: factorization failed at maximum jitter");
}

MatrixXd right_solve(const MatrixXd& b, const CholeskyFactor& factor) {
  require(b.cols() == factor.lower.rows(), ErrorCode::kShapeMismatch,
          "right_solve: shapes not conformal");
  // X S = B  <=>  S X^T = B^T with S = L L^T.
  const auto l = factor.lower.triangularView<Eigen::Lower>();
  MatrixXd y = l.solve(b.transpose());
  return l.transpose().solve(y).transpose();
}

Scaling Scaling::value_directed(double factor, std::vector<Index> reward_rows) {
  require(factor > 0.0 && std::isfinite(factor), ErrorCode::kInvalidArgument,
          "value-directed scaling factor must be > 0");
  return {Mode::kValueDirected, factor, std::move(reward_rows)};
}

VectorXd value_directed_row_scale(Index future_dim, const Scaling& scaling) {
  VectorXd scale = VectorXd::Ones(future_dim);
  if (scaling.mode != Scaling::Mode::kValueDirected) return scale;
  require(scaling.factor > 0.0, ErrorCode::kInvalidArgument,
          "value-directed scaling factor must be > 0");
  scale.setConstant(1.0 / std::sqrt(scaling.factor));
  for (Index r : scaling.reward_rows) {
    require(r >= 0 && r < future_dim, ErrorCode::kInvalidArgument,
            "reward row out of range");
    scale(r) = 1.0;
  }
  return scale;
}

FeatureMatrix value_directed_scale(FeatureMatrix futures,
                                   const std::vector<Index>& reward_rows,
                                   double factor) {
  const VectorXd scale = value_directed_row_scale(
      futures.features(), Scaling::value_directed(factor, reward_rows));
  futures.values = scale.asDiagonal() * futures.values;
  return futures;
}

MatrixXd scale_future_cov(const MatrixXd& th, const Scaling& scaling,
                          const MatrixXd* tt) {
  switch (scaling.mode) {
    case Scaling::Mode::kNone:
      return th;
    case Scaling::Mode::kValueDirected:
      return value_directed_row_scale(th.rows(), scaling).asDiagonal() * th;
    case Scaling::Mode::kCca: {
      require(tt != nullptr && tt->rows() == th.rows() &&
                  tt->cols() == th.rows(),
              ErrorCode::kInvalidArgument,
              "CCA scaling needs the future covariance S_{T,T}");
      return lower_inverse_apply(cholesky_lower(*tt), th);
    }
  }
  return th;
}

Subspace predictive_subspace(const MatrixXd& th, const MatrixXd& hh, Index dim,
                             const Scaling& scaling, const MatrixXd* tt) {
  require(hh.rows() == hh.cols() && th.cols() == hh.rows(),
          ErrorCode::kShapeMismatch, "predictive_subspace: shapes differ");
  require(dim >= 1 && dim <= std::min(th.rows(), th.cols()),
          ErrorCode::kInvalidArgument,
          "predictive_subspace: dim must be in [1, min(d_T, d_H)]");
  const CholeskyFactor lh = cholesky_lower(hh);
  const MatrixXd scaled = scale_future_cov(th, scaling, tt);
  // M = scaled L_H^{-T}, computed as (L_H^{-1} scaled^T)^T.
  const MatrixXd m = lower_inverse_apply(lh, scaled.transpose()).transpose();

  Eigen::BDCSVD<MatrixXd> svd(m, Eigen::ComputeThinU);
  const VectorXd& s = svd.singularValues();
  require(s(0) > 0.0, ErrorCode::kRankDeficient,
          "predictive_subspace: weighted covariance is zero");
  if (s(dim - 1) <= kRankRatio * s(0)) {
    fail(ErrorCode::kRankDeficient,
         "predictive_subspace: singular value " + std::to_string(dim) +
             " is numerically zero; use a smaller dim");
  }

  MatrixXd u = svd.matrixU().leftCols(dim);
  for (Index j = 0; j < dim; ++j) {
    Index arg = 0;
    u.col(j).cwiseAbs().maxCoeff(&arg);  // first index on ties
    if (u(arg, j) < 0.0) u.col(j) = -u.col(j);
  }

  Subspace out;
  out.singular_values = s.head(dim);
  out.spectrum = s;
  out.u_hat = u * out.singular_values.cwiseSqrt().asDiagonal();
  out.scaling = scaling;
  out.jitter = lh.jitter;
  return out;
}

MatrixXd compression_operator(const MatrixXd& u_hat, const MatrixXd& th,
                              const MatrixXd& hh) {
  require(u_hat.rows() == th.rows() && th.cols() == hh.rows() &&
              hh.rows() == hh.cols(),
          ErrorCode::kShapeMismatch, "compression_operator: shapes differ");
  const CholeskyFactor lh = cholesky_lower(hh);
  const MatrixXd gram = u_hat.transpose() * u_hat;
  Eigen::LDLT<MatrixXd> ldlt(gram);
  require(ldlt.info() == Eigen::Success && ldlt.isPositive() &&
              gram.diagonal().minCoeff() > 0.0,
          ErrorCode::kRankDeficient, "compression_operator: U has null columns");
  const MatrixXd proj = ldlt.solve(u_hat.transpose() * th);
  return right_solve(proj, lh);
}

Subspace fit_subspace(const CovarianceSet& cs, Index dim,
                      const Scaling& scaling) {
  const MatrixXd* tt = cs.tt.size() ? &cs.tt : nullptr;
  Subspace sub = predictive_subspace(cs.th, cs.hh, dim, scaling, tt);
  sub.v_hat = compression_operator(sub.u_hat, scale_future_cov(cs.th, scaling, tt),
                                   cs.hh);
  return sub;
}

CovarianceSet scale_future(const CovarianceSet& cs, const VectorXd& row_scale) {
  require(row_scale.size() == cs.future_dim(), ErrorCode::kShapeMismatch,
          "scale_future: row scale length differs from future dimension");
  CovarianceSet out = cs;
  const auto d = row_scale.asDiagonal();
  out.th = d * cs.th;
  if (cs.tt.size()) out.tt = d * cs.tt * d;
  for (auto& [o, m] : out.t_o_h) m = d * m;
  if (cs.t_mean.size()) out.t_mean = d * cs.t_mean;
  return out;
}

void write_spectrum_csv(std::ostream& out, const VectorXd& spectrum) {
  out << "index,singular_value\n";
  out.precision(17);
  for (Index i = 0; i < spectrum.size(); ++i) {
    out << i + 1 << ',' << spectrum(i) << '\n';
  }
}

}  // namespace pstd
