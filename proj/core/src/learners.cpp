#include "pstd/learners.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "pstd/error.hpp"
#include "pstd/matrix_io.hpp"

namespace pstd {

namespace {

void check_gamma(double gamma) {
  require(gamma >= 0.0 && gamma < 1.0, ErrorCode::kInvalidArgument,
          "discount must lie in [0, 1)");
}

void check_covariances(const CovarianceSet& cs) {
  require(cs.hh.size() > 0, ErrorCode::kEmptySample,
          "covariance set is empty");
  require(cs.hh.rows() == cs.hh.cols() && cs.rh.size() == cs.hh.rows() &&
              cs.hplus_h.rows() == cs.hh.rows() &&
              cs.hplus_h.cols() == cs.hh.cols(),
          ErrorCode::kShapeMismatch, "covariance set shapes inconsistent");
}

RowVectorXd solve_rows(const RowVectorXd& rhs, const MatrixXd& a,
                       const MatrixXd& p, PseudoInverse solve,
                       bool* singular) {
  if (solve == PseudoInverse::kProjected) {
    return projected_right_solve(rhs, a, p, singular);
  }
  const PinvResult inv = pinv(a);
  *singular = inv.truncated;
  return rhs * inv.inverse;
}

ValueFunction finish(RowVectorXd w, std::optional<MatrixXd> compressor,
                     LearnerKind kind, double gamma, bool singular) {
  require(w.allFinite(), ErrorCode::kDivergentValue,
          "learned weights are not finite");
  ValueFunction vf;
  vf.w = w.transpose();
  vf.compressor = std::move(compressor);
  vf.kind = kind;
  vf.gamma = gamma;
  vf.singular = singular;
  return vf;
}

}  // namespace

const char* to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::kLstd: return "lstd";
    case LearnerKind::kPstd: return "pstd";
    case LearnerKind::kPstd2: return "pstd2";
    case LearnerKind::kTpsr: return "tpsr";
  }
  return "unknown";
}

LearnerKind learner_from_string(const std::string& name) {
  for (LearnerKind k : {LearnerKind::kLstd, LearnerKind::kPstd,
                        LearnerKind::kPstd2, LearnerKind::kTpsr}) {
    if (name == to_string(k)) return k;
  }
  fail(ErrorCode::kInvalidArgument, "unknown learner '" + name + "'");
}

ValueFunction lstd(const CovarianceSet& cs, double gamma) {
  check_gamma(gamma);
  check_covariances(cs);
  const MatrixXd a = cs.hh - gamma * cs.hplus_h;
  Eigen::FullPivLU<MatrixXd> lu(a.transpose());
  bool singular = false;
  RowVectorXd w;
  if (lu.isInvertible()) {
    w = lu.solve(cs.rh.transpose()).transpose();
  } else {
    const PinvResult inv = pinv(a);
    singular = true;
    w = cs.rh * inv.inverse;
  }
  return finish(std::move(w), std::nullopt, LearnerKind::kLstd, gamma,
                singular);
}

ValueFunction pstd(const CovarianceSet& cs, const MatrixXd& v_hat,
                   double gamma, PseudoInverse solve) {
  check_gamma(gamma);
  check_covariances(cs);
  require(v_hat.rows() >= 1 && v_hat.cols() == cs.history_dim(),
          ErrorCode::kShapeMismatch, "pstd: compressor shape");
  const MatrixXd p = v_hat * cs.hh;
  const MatrixXd a = p - gamma * (v_hat * cs.hplus_h);
  bool singular = false;
  RowVectorXd w = solve_rows(cs.rh, a, p, solve, &singular);
  return finish(std::move(w), v_hat, LearnerKind::kPstd, gamma, singular);
}

ValueFunction pstd2(const CovarianceSet& cs, const MatrixXd& u_hat,
                    double gamma, PseudoInverse solve) {
  check_gamma(gamma);
  check_covariances(cs);
  require(!cs.t_o_h.empty(), ErrorCode::kInvalidArgument,
          "pstd2: covariance set lacks S_{T,o,H}");
  require(u_hat.rows() == cs.future_dim() && u_hat.cols() >= 1,
          ErrorCode::kShapeMismatch, "pstd2: up-mapping shape");
  const MatrixXd p = u_hat.transpose() * cs.th;
  MatrixXd next = MatrixXd::Zero(p.rows(), p.cols());
  for (const auto& [o, m] : cs.t_o_h) {
    require(m.rows() == cs.future_dim() && m.cols() == cs.history_dim(),
            ErrorCode::kShapeMismatch, "pstd2: S_{T,o,H} shape");
    next += u_hat.transpose() * m;
  }
  const MatrixXd a = p - gamma * next;
  bool singular = false;
  RowVectorXd w = solve_rows(cs.rh, a, p, solve, &singular);
  return finish(std::move(w), std::nullopt, LearnerKind::kPstd2, gamma,
                singular);
}

double evaluate(const ValueFunction& vf, const VectorXd& phi) {
  require(phi.size() == vf.input_dim(), ErrorCode::kShapeMismatch,
          "evaluate: feature dimension differs from value function");
  if (vf.compressor) return vf.w.dot(*vf.compressor * phi);
  return vf.w.dot(phi);
}

VectorXd effective_weights(const ValueFunction& vf) {
  if (vf.compressor) return vf.compressor->transpose() * vf.w;
  return vf.w;
}

void save_value_function(std::ostream& out, const ValueFunction& vf) {
  Container c;
  c.entries["type"] = "value_function";
  c.entries["learner"] = to_string(vf.kind);
  std::ostringstream g;
  g.precision(17);
  g << vf.gamma;
  c.entries["gamma"] = g.str();
  c.entries["singular"] = vf.singular ? "1" : "0";
  c.matrices["w"] = vf.w;
  if (vf.compressor) c.matrices["compressor"] = *vf.compressor;
  write_container(out, c);
}

ValueFunction load_value_function(std::istream& in) {
  const Container c = read_container(in);
  require(c.entry("type") == "value_function", ErrorCode::kParse,
          "container does not hold a value function");
  ValueFunction vf;
  vf.kind = learner_from_string(c.entry("learner"));
  try {
    vf.gamma = std::stod(c.entry("gamma"));
  } catch (const std::exception&) {
    fail(ErrorCode::kParse, "value function: bad gamma");
  }
  vf.singular = c.entry("singular") == "1";
  const MatrixXd& w = c.matrix("w");
  require(w.cols() == 1, ErrorCode::kParse, "value function: w not a column");
  vf.w = w.col(0);
  if (c.has_matrix("compressor")) {
    vf.compressor = c.matrix("compressor");
    require(vf.compressor->rows() == vf.w.size(), ErrorCode::kParse,
            "value function: compressor rows differ from w");
  }
  return vf;
}

}  // namespace pstd
