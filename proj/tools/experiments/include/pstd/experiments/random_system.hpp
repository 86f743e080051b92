#pragma once

// Random linear systems used by the equivalence and stationarity checks.

#include <cstdint>
#include <random>

#include "pstd/covariance.hpp"

namespace pstd::experiments {

struct RandomSystemShape {
  Index samples = 200;
  Index history_dim = 10;
  Index future_dim = 12;
  int symbols = 2;
};

/// H_{t+1} = 0.5 H_t + noise, futures a noisy linear read-out of history,
/// rewards a noisy linear function of history, symbols drawn uniformly.
inline TransitionSet random_transitions(std::uint64_t seed,
                                        RandomSystemShape shape = {}) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> symbol(0, shape.symbols - 1);
  auto gaussian = [&](Index r, Index c) {
    MatrixXd m(r, c);
    for (Index j = 0; j < c; ++j)
      for (Index i = 0; i < r; ++i) m(i, j) = normal(rng);
    return m;
  };
  const Index k = shape.samples;
  const MatrixXd read_out = gaussian(shape.future_dim, shape.history_dim);
  const MatrixXd reward_map = gaussian(1, shape.history_dim);

  MatrixXd h(shape.history_dim, k + 1);
  h.col(0) = gaussian(shape.history_dim, 1);
  for (Index t = 0; t < k; ++t) {
    h.col(t + 1) = 0.5 * h.col(t) + gaussian(shape.history_dim, 1);
  }
  const MatrixXd f =
      read_out * h + 0.3 * gaussian(shape.future_dim, k + 1);

  TransitionSet ts;
  ts.history = h.leftCols(k);
  ts.next_history = h.rightCols(k);
  ts.future = f.leftCols(k);
  ts.next_future = f.rightCols(k);
  ts.reward = (reward_map * h.leftCols(k)).transpose() +
              0.1 * gaussian(k, 1);
  for (Index t = 0; t < k; ++t) {
    ts.symbol.push_back(symbol(rng));
    ts.indices.push_back(t);
  }
  return ts;
}

/// Frobenius loss ||T - U V H||^2 expressed through covariances (up to the
/// constant tr(S_TT) and the factor k).
inline double compression_loss(const MatrixXd& u, const MatrixXd& v,
                               const MatrixXd& th, const MatrixXd& hh) {
  const MatrixXd uv = u * v;
  return (uv * hh * uv.transpose()).trace() - 2.0 * (uv * th.transpose()).trace();
}

/// Gradient of compression_loss with respect to v.
inline MatrixXd compression_gradient(const MatrixXd& u, const MatrixXd& v,
                                     const MatrixXd& th, const MatrixXd& hh) {
  return 2.0 * (u.transpose() * u * v * hh - u.transpose() * th);
}

}  // namespace pstd::experiments
