#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "pstd/covariance.hpp"
#include "pstd/linalg.hpp"

namespace pstd {

enum class LearnerKind { kLstd, kPstd, kPstd2, kTpsr };

const char* to_string(LearnerKind kind);
LearnerKind learner_from_string(const std::string& name);

/// Linear value function J(h) = w^T C phi(h), where C is the optional
/// compressor (absent for LSTD; for PSTD2 w lives on filtered TPSR state).
struct ValueFunction {
  VectorXd w;
  std::optional<MatrixXd> compressor;
  LearnerKind kind = LearnerKind::kLstd;
  double gamma = 0.0;
  bool singular = false;  // a pseudo-inverse dropped singular directions

  Index input_dim() const {
    return compressor ? compressor->cols() : w.size();
  }
};

enum class PseudoInverse {
  kProjected,     // rhs P^+ (A P^+)^{-1}; exact TPSR Bellman solution
  kMoorePenrose,  // rhs A^+
};

ValueFunction lstd(const CovarianceSet& cs, double gamma);

ValueFunction pstd(const CovarianceSet& cs, const MatrixXd& v_hat,
                   double gamma,
                   PseudoInverse solve = PseudoInverse::kProjected);

/// Uses S_{T,o,H}: w^T = S_{R,H} (U^T S_{T,H} - gamma sum_o U^T S_{T,o,H})^+.
/// The returned weights act on TPSR state from learn_tpsr_correlated.
ValueFunction pstd2(const CovarianceSet& cs, const MatrixXd& u_hat,
                    double gamma,
                    PseudoInverse solve = PseudoInverse::kProjected);

double evaluate(const ValueFunction& vf, const VectorXd& phi);

/// C^T w, so that evaluate(vf, phi) == effective_weights(vf).dot(phi).
VectorXd effective_weights(const ValueFunction& vf);

void save_value_function(std::ostream& out, const ValueFunction& vf);
ValueFunction load_value_function(std::istream& in);

}  // namespace pstd
