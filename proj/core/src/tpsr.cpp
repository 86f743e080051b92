#include "pstd/tpsr.hpp"

#include <cmath>
#include <complex>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "pstd/compression.hpp"
#include "pstd/error.hpp"
#include "pstd/matrix_io.hpp"

namespace pstd {

namespace {

constexpr double kNormalizerTol = 1e-12;

MatrixXd transition_sum(const TpsrModel& m) {
  MatrixXd s = MatrixXd::Zero(m.dim(), m.dim());
  for (const auto& [o, b] : m.B) s += b;
  return s;
}

// Left eigenvector of S with eigenvalue closest to 1, scaled so v^T b1 = 1.
VectorXd normalizer(const MatrixXd& s, const VectorXd& b1) {
  Eigen::EigenSolver<MatrixXd> es(s.transpose());
  require(es.info() == Eigen::Success, ErrorCode::kFactorizationFailed,
          "tpsr: eigen decomposition failed");
  Index best = 0;
  double gap = INFINITY;
  for (Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double d = std::abs(es.eigenvalues()(i) - std::complex<double>(1.0));
    if (d < gap) {
      gap = d;
      best = i;
    }
  }
  VectorXd v = es.eigenvectors().col(best).real();
  const double scale = v.dot(b1);
  require(std::abs(scale) > kNormalizerTol, ErrorCode::kRankDeficient,
          "tpsr: normalizer orthogonal to the initial state");
  return v / scale;
}

struct Projection {
  MatrixXd p;      // U^T S_TH
  MatrixXd p_inv;  // (U^T S_TH)^+
  MatrixXd state_map;
};

Projection project(const CovarianceSet& cs, const MatrixXd& u) {
  require(cs.hh.size() > 0, ErrorCode::kEmptySample,
          "tpsr: covariance set is empty");
  require(u.rows() == cs.future_dim() && u.cols() >= 1 &&
              u.cols() <= cs.history_dim(),
          ErrorCode::kShapeMismatch, "tpsr: U shape");
  require(cs.h_mean.size() == cs.history_dim(), ErrorCode::kInvalidArgument,
          "tpsr: covariance set lacks the mean history feature");
  Projection out;
  out.p = u.transpose() * cs.th;
  const PinvResult inv = pinv(out.p);
  require(inv.rank == u.cols(), ErrorCode::kRankDeficient,
          "tpsr: U^T S_TH does not have full row rank");
  out.p_inv = inv.inverse;
  out.state_map = right_solve(out.p, cholesky_lower(cs.hh));
  return out;
}

TpsrModel assemble(const CovarianceSet& cs, const Projection& pr,
                   std::map<int, MatrixXd> b, double gamma) {
  require(gamma >= 0.0 && gamma < 1.0, ErrorCode::kInvalidArgument,
          "discount must lie in [0, 1)");
  TpsrModel m;
  m.B = std::move(b);
  m.state_map = pr.state_map;
  m.b1 = pr.state_map * cs.h_mean;
  m.b_eta = (cs.rh * pr.p_inv).transpose();
  m.gamma = gamma;
  m.b_inf = normalizer(transition_sum(m), m.b1);
  return m;
}

}  // namespace

TpsrModel learn_tpsr(const CovarianceSet& cs, const MatrixXd& u,
                     double gamma) {
  const Projection pr = project(cs, u);
  require(!cs.h_o_h.empty(), ErrorCode::kInvalidArgument,
          "tpsr: covariance set lacks S_{H,o,H}");
  std::map<int, MatrixXd> b;
  for (const auto& [o, m] : cs.h_o_h) b[o] = pr.state_map * m * pr.p_inv;
  return assemble(cs, pr, std::move(b), gamma);
}

TpsrModel learn_tpsr_correlated(const CovarianceSet& cs, const MatrixXd& u,
                                double gamma) {
  const Projection pr = project(cs, u);
  require(!cs.t_o_h.empty(), ErrorCode::kInvalidArgument,
          "tpsr: covariance set lacks S_{T,o,H}");
  std::map<int, MatrixXd> b;
  for (const auto& [o, m] : cs.t_o_h) b[o] = u.transpose() * m * pr.p_inv;
  return assemble(cs, pr, std::move(b), gamma);
}

double predict(const TpsrModel& model, const VectorXd& b, int o) {
  auto it = model.B.find(o);
  require(it != model.B.end(), ErrorCode::kInvalidArgument,
          "tpsr: unknown observation " + std::to_string(o));
  require(b.size() == model.dim(), ErrorCode::kShapeMismatch,
          "tpsr: state dimension");
  return model.b_inf.dot(it->second * b);
}

VectorXd filter(const TpsrModel& model, const VectorXd& b, int o) {
  auto it = model.B.find(o);
  require(it != model.B.end(), ErrorCode::kInvalidArgument,
          "tpsr: unknown observation " + std::to_string(o));
  require(b.size() == model.dim(), ErrorCode::kShapeMismatch,
          "tpsr: state dimension");
  const VectorXd next = it->second * b;
  const double z = model.b_inf.dot(next);
  require(std::isfinite(z) && std::abs(z) >= kNormalizerTol,
          ErrorCode::kFilterDivergence, "tpsr: filter normalizer vanished");
  return next / z;
}

ValueFunction tpsr_value_function(const TpsrModel& model) {
  require(model.gamma >= 0.0 && model.gamma < 1.0, ErrorCode::kInvalidArgument,
          "discount must lie in [0, 1)");
  require(model.b_eta.size() == model.dim(), ErrorCode::kShapeMismatch,
          "tpsr: reward parameter dimension");
  const MatrixXd s = model.gamma * transition_sum(model);
  const double rho = spectral_radius(s);
  require(rho < 1.0, ErrorCode::kDivergentValue,
          "tpsr: spectral radius of gamma sum_o B_o is " + std::to_string(rho));
  const MatrixXd a = MatrixXd::Identity(model.dim(), model.dim()) - s;
  ValueFunction vf;
  vf.w = a.transpose().partialPivLu().solve(model.b_eta);
  require(vf.w.allFinite(), ErrorCode::kDivergentValue,
          "tpsr: value weights not finite");
  vf.kind = LearnerKind::kTpsr;
  vf.gamma = model.gamma;
  if (model.state_map.size()) vf.compressor = model.state_map;
  return vf;
}

void save_tpsr_model(std::ostream& out, const TpsrModel& model) {
  Container c;
  c.entries["type"] = "tpsr_model";
  std::ostringstream g;
  g.precision(17);
  g << model.gamma;
  c.entries["gamma"] = g.str();
  c.matrices["b1"] = model.b1;
  c.matrices["b_inf"] = model.b_inf;
  c.matrices["b_eta"] = model.b_eta;
  if (model.state_map.size()) c.matrices["state_map"] = model.state_map;
  for (const auto& [o, b] : model.B) {
    c.matrices["B." + std::to_string(o)] = b;
  }
  write_container(out, c);
}

TpsrModel load_tpsr_model(std::istream& in) {
  const Container c = read_container(in);
  require(c.entry("type") == "tpsr_model", ErrorCode::kParse,
          "container does not hold a TPSR model");
  TpsrModel m;
  try {
    m.gamma = std::stod(c.entry("gamma"));
  } catch (const std::exception&) {
    fail(ErrorCode::kParse, "tpsr model: bad gamma");
  }
  m.b1 = c.matrix("b1").col(0);
  m.b_inf = c.matrix("b_inf").col(0);
  m.b_eta = c.matrix("b_eta").col(0);
  if (c.has_matrix("state_map")) m.state_map = c.matrix("state_map");
  for (const auto& [name, mat] : c.matrices) {
    if (name.rfind("B.", 0) == 0) {
      try {
        m.B[std::stoi(name.substr(2))] = mat;
      } catch (const std::exception&) {
        fail(ErrorCode::kParse, "tpsr model: bad observation key " + name);
      }
    }
  }
  const Index n = m.b1.size();
  require(m.b_inf.size() == n && m.b_eta.size() == n, ErrorCode::kParse,
          "tpsr model: vector sizes differ");
  for (const auto& [o, b] : m.B) {
    require(b.rows() == n && b.cols() == n, ErrorCode::kParse,
            "tpsr model: B shape");
  }
  return m;
}

}  // namespace pstd
