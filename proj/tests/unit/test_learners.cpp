#include <gtest/gtest.h>

#include <sstream>

#include "pstd/compression.hpp"
#include "pstd/envs.hpp"
#include "pstd/error.hpp"
#include "pstd/learners.hpp"
#include "pstd/tpsr.hpp"
#include "pstd/experiments/random_system.hpp"

namespace pstd {
namespace {

// Population covariances of a fully observed chain with one-hot features.
CovarianceSet chain_covariances(const PomdpSpec& spec) {
  const VectorXd pi = stationary_distribution(spec.transition);
  CovarianceSet cs;
  cs.hh = pi.asDiagonal();
  cs.hplus_h = spec.transition * pi.asDiagonal();
  cs.h_o_h[0] = cs.hplus_h;
  cs.rh = spec.reward.cwiseProduct(pi).transpose();
  cs.th = cs.hh;
  cs.tt = cs.hh;
  cs.h_mean = pi;
  cs.t_mean = pi;
  return cs;
}

CovarianceSet constant_chain(double reward) {
  CovarianceSet cs;
  cs.hh = MatrixXd::Ones(1, 1);
  cs.hplus_h = MatrixXd::Ones(1, 1);
  cs.h_o_h[0] = cs.hplus_h;
  cs.rh = RowVectorXd::Constant(1, reward);
  cs.th = MatrixXd::Ones(1, 1);
  cs.t_o_h[0] = MatrixXd::Ones(1, 1);
  cs.h_mean = VectorXd::Ones(1);
  return cs;
}

TEST(Lstd, ConstantFeatureGeometricSeries) {
  const auto vf = lstd(constant_chain(1.0), 0.5);
  ASSERT_EQ(vf.w.size(), 1);
  EXPECT_NEAR(vf.w(0), 2.0, 1e-14);
  EXPECT_FALSE(vf.singular);
}

TEST(Lstd, MyopicIsRewardRegression) {
  const auto cs = build_covariance_set(experiments::random_transitions(1));
  const auto vf = lstd(cs, 0.0);
  const VectorXd ls = cs.hh.ldlt().solve(cs.rh.transpose());
  EXPECT_LE((vf.w - ls).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Lstd, FullyObservedChainRecoversTrueValue) {
  PomdpSpec spec = rr_pomdp_spec();
  spec.emission = MatrixXd::Identity(4, 4);
  const auto vf = lstd(chain_covariances(spec), spec.gamma);
  EXPECT_LE((vf.w - true_value(spec)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Lstd, SingularSystemUsesPseudoInverse) {
  CovarianceSet cs = constant_chain(1.0);
  cs.hh = MatrixXd::Zero(1, 1);
  cs.hplus_h = MatrixXd::Zero(1, 1);
  const auto vf = lstd(cs, 0.5);
  EXPECT_TRUE(vf.singular);
  EXPECT_EQ(vf.w(0), 0.0);
}

TEST(Lstd, Errors) {
  EXPECT_THROW(lstd(constant_chain(1.0), 1.0), Error);
  EXPECT_THROW(lstd(constant_chain(1.0), -0.1), Error);
  try {
    lstd(CovarianceSet{}, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptySample);
  }
}

TEST(Pstd, IdentityCompressorEqualsLstd) {
  const auto cs = build_covariance_set(experiments::random_transitions(2));
  const MatrixXd id = MatrixXd::Identity(cs.history_dim(), cs.history_dim());
  const auto a = lstd(cs, 0.9);
  const auto b = pstd(cs, id, 0.9);
  EXPECT_LE((a.w - b.w).cwiseAbs().maxCoeff(), 1e-10);
  const auto c = pstd(cs, id, 0.9, PseudoInverse::kMoorePenrose);
  EXPECT_LE((a.w - c.w).cwiseAbs().maxCoeff(), 1e-10);
  const VectorXd phi = experiments::random_transitions(3).history.col(0);
  EXPECT_NEAR(evaluate(a, phi), evaluate(b, phi), 1e-10);
}

TEST(Pstd, MyopicCase) {
  const auto cs = build_covariance_set(experiments::random_transitions(4));
  const auto sub = fit_subspace(cs, 3);
  const auto vf = pstd(cs, sub.v_hat, 0.0);
  const RowVectorXd expected = cs.rh * pinv(sub.v_hat * cs.hh).inverse;
  EXPECT_LE((vf.w.transpose() - expected).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Pstd, ShapeErrors) {
  const auto cs = build_covariance_set(experiments::random_transitions(5));
  EXPECT_THROW(pstd(cs, MatrixXd::Identity(3, 3), 0.5), Error);
}

TEST(Pstd, MatchesTpsrBellmanSolution) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto cs = build_covariance_set(experiments::random_transitions(seed));
    for (Index n = 1; n <= 3; ++n) {
      const auto sub = fit_subspace(cs, n);
      const auto p = pstd(cs, sub.v_hat, 0.9);
      const auto t = tpsr_value_function(learn_tpsr(cs, sub.u_hat, 0.9));
      const VectorXd matched = sub.u_hat.transpose() * sub.u_hat * t.w;
      EXPECT_LE((p.w - matched).cwiseAbs().maxCoeff(), 1e-8) << seed << n;
      EXPECT_LE((effective_weights(p) - effective_weights(t)).cwiseAbs().maxCoeff(),
                1e-8);
    }
  }
}

TEST(Pstd2, ScalarAbsorption) {
  CovarianceSet cs = build_covariance_set(experiments::random_transitions(6));
  const double c = 0.7, gamma = 0.8;
  cs.t_o_h.clear();
  cs.t_o_h[0] = c * cs.th;
  const auto sub = fit_subspace(cs, 3);
  const auto vf = pstd2(cs, sub.u_hat, gamma);
  const RowVectorXd expected =
      cs.rh * pinv((1 - gamma * c) * sub.u_hat.transpose() * cs.th).inverse;
  EXPECT_LE((vf.w.transpose() - expected).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Pstd2, MyopicIsRewardParameter) {
  const auto cs = build_covariance_set(experiments::random_transitions(7));
  const auto sub = fit_subspace(cs, 3);
  const auto vf = pstd2(cs, sub.u_hat, 0.0);
  const auto model = learn_tpsr_correlated(cs, sub.u_hat, 0.0);
  EXPECT_LE((vf.w - model.b_eta).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Pstd2, MatchesCorrelatedTpsr) {
  const auto cs = build_covariance_set(experiments::random_transitions(8));
  const auto sub = fit_subspace(cs, 3);
  const auto vf = pstd2(cs, sub.u_hat, 0.9);
  const auto t = tpsr_value_function(learn_tpsr_correlated(cs, sub.u_hat, 0.9));
  EXPECT_LE((vf.w - t.w).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Pstd2, RequiresFutureIndicatorCovariances) {
  CovarianceSet cs = build_covariance_set(experiments::random_transitions(9));
  const auto sub = fit_subspace(cs, 2);
  cs.t_o_h.clear();
  EXPECT_THROW(pstd2(cs, sub.u_hat, 0.5), Error);
}

TEST(Learners, RewardScaleEquivariance) {
  auto ts = experiments::random_transitions(10);
  const auto cs = build_covariance_set(ts);
  ts.reward *= -3.0;
  const auto cs3 = build_covariance_set(ts);
  const auto sub = fit_subspace(cs, 3);
  EXPECT_LE((lstd(cs3, 0.9).w + 3.0 * lstd(cs, 0.9).w).norm(), 1e-9);
  EXPECT_LE((pstd(cs3, sub.v_hat, 0.9).w + 3.0 * pstd(cs, sub.v_hat, 0.9).w).norm(),
            1e-9);
  EXPECT_LE(
      (pstd2(cs3, sub.u_hat, 0.9).w + 3.0 * pstd2(cs, sub.u_hat, 0.9).w).norm(),
      1e-9);
}

TEST(Evaluate, ScalarCases) {
  ValueFunction vf;
  vf.w = VectorXd::Zero(2);
  EXPECT_EQ(evaluate(vf, VectorXd::Ones(2)), 0.0);
  vf.w = VectorXd::Constant(1, 2.0);
  EXPECT_EQ(evaluate(vf, VectorXd::Constant(1, 3.0)), 6.0);
  EXPECT_THROW(evaluate(vf, VectorXd::Ones(2)), Error);
}

TEST(Learners, NamesRoundTrip) {
  for (auto k : {LearnerKind::kLstd, LearnerKind::kPstd, LearnerKind::kPstd2,
                 LearnerKind::kTpsr}) {
    EXPECT_EQ(learner_from_string(to_string(k)), k);
  }
  EXPECT_THROW(learner_from_string("lars"), Error);
}

TEST(Learners, SerializationRoundTrip) {
  const auto cs = build_covariance_set(experiments::random_transitions(11));
  const auto sub = fit_subspace(cs, 3);
  const auto vf = pstd(cs, sub.v_hat, 0.9);
  std::stringstream ss;
  save_value_function(ss, vf);
  const auto back = load_value_function(ss);
  EXPECT_EQ(back.w, vf.w);
  ASSERT_TRUE(back.compressor.has_value());
  EXPECT_EQ(*back.compressor, *vf.compressor);
  EXPECT_EQ(back.kind, LearnerKind::kPstd);
  EXPECT_EQ(back.gamma, 0.9);

  std::stringstream plain;
  save_value_function(plain, lstd(cs, 0.5));
  EXPECT_FALSE(load_value_function(plain).compressor.has_value());

  std::stringstream junk("pstd-container 9\nend\n");
  EXPECT_THROW(load_value_function(junk), Error);
}

}  // namespace
}  // namespace pstd
