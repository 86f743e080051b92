#include "pstd/experiments/oracles.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <random>

#include "pstd/compression.hpp"
#include "pstd/envs.hpp"
#include "pstd/experiments/random_system.hpp"
#include "pstd/learners.hpp"
#include "pstd/tpsr.hpp"

namespace pstd::experiments {

namespace {

RandomSystemShape shape_of(const EquivalenceConfig& c) {
  return {c.samples, c.history_dim, c.future_dim, c.symbols};
}

MatrixXd gaussian(Index r, Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = normal(rng);
  return m;
}

MatrixXd one_hot(const std::vector<int>& states, Index first, Index count,
                 Index m) {
  MatrixXd out = MatrixXd::Zero(m, count);
  for (Index c = 0; c < count; ++c) {
    out(states[static_cast<std::size_t>(first + c)], c) = 1.0;
  }
  return out;
}

PomdpSpec observed_rr_chain() {
  PomdpSpec spec = rr_pomdp_spec();
  spec.emission = MatrixXd::Identity(spec.states(), spec.states());
  return spec;
}

}  // namespace

double relative_partition_gap(const CovarianceSet& cs) {
  return partition_gap(cs) / std::max(1.0, max_abs(cs.hplus_h));
}

EquivalenceMeasure measure_equivalence(const EquivalenceConfig& config,
                                       std::span<const std::uint64_t> seeds) {
  EquivalenceMeasure m;
  for (std::uint64_t seed : seeds) {
    const auto cs = build_covariance_set(random_transitions(seed, shape_of(config)));
    m.max_partition_gap = std::max(m.max_partition_gap, relative_partition_gap(cs));
    for (Index n : config.dims) {
      const Subspace sub = fit_subspace(cs, n);
      const ValueFunction p = pstd(cs, sub.v_hat, config.gamma);
      const ValueFunction t =
          tpsr_value_function(learn_tpsr(cs, sub.u_hat, config.gamma));
      const VectorXd matched = sub.u_hat.transpose() * sub.u_hat * t.w;
      m.max_weight_gap = std::max(m.max_weight_gap, max_abs(p.w - matched));
      m.max_effective_gap = std::max(
          m.max_effective_gap, max_abs(effective_weights(p) - effective_weights(t)));
      ++m.cases;
    }
  }
  return m;
}

StationarityMeasure measure_stationarity(const EquivalenceConfig& config,
                                         std::span<const std::uint64_t> seeds,
                                         Index perturbations_per_case) {
  StationarityMeasure m;
  for (std::uint64_t seed : seeds) {
    const auto cs = build_covariance_set(random_transitions(seed, shape_of(config)));
    m.max_partition_gap = std::max(m.max_partition_gap, relative_partition_gap(cs));
    for (Index n : config.dims) {
      std::mt19937_64 rng(splitmix64(seed) ^ static_cast<std::uint64_t>(n));
      const Subspace sub = fit_subspace(cs, n);
      const MatrixXd& u = sub.u_hat;
      const MatrixXd& v = sub.v_hat;
      auto loss = [&](const MatrixXd& x) {
        return compression_loss(u, x, cs.th, cs.hh);
      };
      m.max_gradient_norm = std::max(
          m.max_gradient_norm, compression_gradient(u, v, cs.th, cs.hh).norm());

      // Central differences away from the optimum, where the gradient is
      // large enough for a relative comparison.
      const MatrixXd x = v + gaussian(v.rows(), v.cols(), rng);
      const MatrixXd g = compression_gradient(u, x, cs.th, cs.hh);
      MatrixXd fd(v.rows(), v.cols());
      const double h = 1e-5;
      for (Index j = 0; j < v.cols(); ++j) {
        for (Index i = 0; i < v.rows(); ++i) {
          MatrixXd up = x, down = x;
          up(i, j) += h;
          down(i, j) -= h;
          fd(i, j) = (loss(up) - loss(down)) / (2.0 * h);
        }
      }
      m.max_fd_relative_error =
          std::max(m.max_fd_relative_error, (fd - g).norm() / g.norm());

      const double base = loss(v);
      for (Index p = 0; p < perturbations_per_case; ++p) {
        MatrixXd d = gaussian(v.rows(), v.cols(), rng);
        d *= 1e-3 / d.norm();
        if (loss(v + d) < base) ++m.perturbation_violations;
        ++m.perturbations;
      }
    }
  }
  return m;
}

LstdChainMeasure measure_lstd_chain(std::span<const std::uint64_t> seeds,
                                    Index small_samples, Index large_samples) {
  const PomdpSpec spec = observed_rr_chain();
  const Index s = spec.states();
  const VectorXd j = true_value(spec);
  LstdChainMeasure m;

  const VectorXd pi = stationary_distribution(spec.transition);
  CovarianceSet analytic;
  analytic.hh = pi.asDiagonal();
  analytic.hplus_h = spec.transition * pi.asDiagonal();
  analytic.h_o_h[0] = analytic.hplus_h;
  analytic.rh = spec.reward.cwiseProduct(pi).transpose();
  analytic.th = analytic.hh;
  analytic.tt = analytic.hh;
  analytic.h_mean = pi;
  analytic.t_mean = pi;
  m.analytic_error = max_abs(lstd(analytic, spec.gamma).w - j);

  auto sampled_error = [&](std::uint64_t seed, Index k) {
    std::vector<int> latent;
    simulate_pomdp(spec, k + 1, seed, &latent);
    TransitionSet ts;
    ts.history = one_hot(latent, 0, k, s);
    ts.next_history = one_hot(latent, 1, k, s);
    ts.future = ts.next_history;
    ts.reward.resize(k);
    for (Index t = 0; t < k; ++t) {
      const int state = latent[static_cast<std::size_t>(t)];
      ts.reward(t) = spec.reward(state);
      ts.symbol.push_back(state);
      ts.indices.push_back(t);
    }
    const auto cs = build_covariance_set(ts);
    m.max_partition_gap = std::max(m.max_partition_gap, relative_partition_gap(cs));
    return max_abs(lstd(cs, spec.gamma).w - j);
  };
  for (std::uint64_t seed : seeds) {
    const double small = sampled_error(seed, small_samples);
    const double large = sampled_error(splitmix64(seed), large_samples);
    m.small_sample_error.push_back(small);
    m.large_sample_error.push_back(large);
    if (large < small) ++m.improved;
  }
  return m;
}

RankMeasure measure_rr_pomdp_rank() {
  const auto cs = analytic_window_covariances(rr_pomdp_spec(), {5, 5});
  RankMeasure m;
  m.singular_values = Eigen::JacobiSVD<MatrixXd>(cs.th).singularValues();
  m.ratio = m.singular_values(3) / m.singular_values(0);
  m.max_partition_gap = relative_partition_gap(cs);
  return m;
}

FilterMeasure measure_tpsr_filter(std::span<const std::uint64_t> seeds,
                                  Index steps) {
  const PomdpSpec spec = rr_pomdp_spec();
  const auto cs = analytic_window_covariances(spec, {5, 5});
  const Subspace sub = fit_subspace(cs, 3);
  const TpsrModel model = learn_tpsr_correlated(cs, sub.u_hat, spec.gamma);
  FilterMeasure m;
  m.max_partition_gap = relative_partition_gap(cs);
  for (std::uint64_t seed : seeds) {
    const Trajectory traj = simulate_pomdp(spec, steps, seed);
    BeliefFilter belief(spec);
    VectorXd b = model.b1;
    for (int o : traj.symbols()) {
      for (int q = 0; q < spec.observations(); ++q) {
        m.max_prediction_error = std::max(
            m.max_prediction_error, std::abs(predict(model, b, q) - belief.predict(q)));
        ++m.predictions;
      }
      b = filter(model, b, o);
      belief.update(o);
    }
  }
  return m;
}

}  // namespace pstd::experiments
