#pragma once

#include <iosfwd>
#include <map>

#include "pstd/covariance.hpp"
#include "pstd/learners.hpp"
#include "pstd/linalg.hpp"

namespace pstd {

/// Transformed PSR, identified up to a similarity transform.
struct TpsrModel {
  VectorXd b1;
  VectorXd b_inf;
  VectorXd b_eta;
  std::map<int, MatrixXd> B;
  MatrixXd state_map;  // b(phi) = state_map * phi
  double gamma = 0.0;

  Index dim() const { return b1.size(); }
  VectorXd state_of(const VectorXd& phi_h) const { return state_map * phi_h; }
};

/// B_o = U^T S_TH S_HH^{-1} S_{H,o,H} (U^T S_TH)^+. Requires features of
/// history that determine state.
TpsrModel learn_tpsr(const CovarianceSet& cs, const MatrixXd& u, double gamma);

/// B_o = U^T S_{T,o,H} (U^T S_TH)^+. Valid when state is merely correlated
/// with features of history.
TpsrModel learn_tpsr_correlated(const CovarianceSet& cs, const MatrixXd& u,
                                double gamma);

/// Pr[o | b] = b_inf^T B_o b.
double predict(const TpsrModel& model, const VectorXd& b, int o);

/// b' = B_o b / (b_inf^T B_o b). Throws kFilterDivergence when the
/// normalizer is below 1e-12 in magnitude.
VectorXd filter(const TpsrModel& model, const VectorXd& b, int o);

/// Solves w^T (I - gamma sum_o B_o) = b_eta^T. The result evaluates
/// histories through `state_map`.
ValueFunction tpsr_value_function(const TpsrModel& model);

void save_tpsr_model(std::ostream& out, const TpsrModel& model);
TpsrModel load_tpsr_model(std::istream& in);

}  // namespace pstd
