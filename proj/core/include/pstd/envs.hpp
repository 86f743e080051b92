#pragma once

// Benchmark environments: a reduced-rank POMDP with an exact value function,
// and the geometric-Brownian-motion market behind the 100-day "psychic call".

#include <cstdint>
#include <span>
#include <vector>

#include "pstd/covariance.hpp"
#include "pstd/features.hpp"
#include "pstd/linalg.hpp"

namespace pstd {

/// Fixed-policy POMDP. transition(s', s) = Pr[s' | s] (columns sum to 1),
/// emission(o, s) = Pr[o | s].
struct PomdpSpec {
  MatrixXd transition;
  MatrixXd emission;
  VectorXd reward;
  double gamma = 0.0;
  double max_renormalization = 0.0;  // largest entry change from renormalizing

  Index states() const { return transition.rows(); }
  Index observations() const { return emission.rows(); }
};

/// 4 latent states, 2 observations, rank-3 transitions, gamma = 0.9.
PomdpSpec rr_pomdp_spec();

/// Divides every column of the transition and emission matrices by its sum.
PomdpSpec renormalized(PomdpSpec spec);

VectorXd stationary_distribution(const MatrixXd& transition);

/// Starts from the stationary distribution; rewards[t] = R(s_t) where s_t
/// emits observation t. `latent` receives the state path when non-null.
Trajectory simulate_pomdp(const PomdpSpec& spec, Index steps,
                          std::uint64_t seed,
                          std::vector<int>* latent = nullptr);

/// J = R + gamma T^T J.
VectorXd true_value(const PomdpSpec& spec);

/// Exact belief over the latent state that emits the next observation.
class BeliefFilter {
 public:
  explicit BeliefFilter(const PomdpSpec& spec);

  const VectorXd& belief() const { return belief_; }
  void set_belief(const VectorXd& belief);

  double predict(int o) const;
  /// Throws kZeroProbability when o has probability zero.
  void update(int o);

 private:
  const PomdpSpec* spec_;
  VectorXd belief_;
};

/// belief(window) . J with the belief filtered from the stationary prior.
double history_true_value(const PomdpSpec& spec, std::span<const int> window);

/// Population covariances for one-hot indicator features over every history
/// window of length l_H and future window of length l_T (z^l features each).
/// Window index i encodes symbols in base z, oldest symbol most significant.
CovarianceSet analytic_window_covariances(const PomdpSpec& spec,
                                          WindowSpec windows);

// ---------------------------------------------------------------------------
// Market

inline constexpr Index kMarketWindow = 100;
inline constexpr Index kCanonicalBasisSize = 16;
inline constexpr Index kExtendedBasisSize = 220;

/// Exact log-normal one-day steps: p_{t+1} = p_t exp(rho - sigma^2/2 + sigma xi).
/// SplitMix64 finalizer, used to derive independent per-stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

std::vector<double> simulate_gbm(double sigma, double rho, Index steps,
                                 std::uint64_t seed, double p0 = 1.0);

struct MarketState {
  VectorXd x;           // x(i) = p_{t-100+i} / p_{t-100}, i = 1..100
  double price = 1.0;   // p_t
};

/// State at time t (t >= 100) of a price path.
MarketState market_state(std::span<const double> prices, Index t);

/// G(x) = x(100); the reward for continuing is 0.
double payoff(const MarketState& s);
inline double payoff(const Eigen::Ref<const VectorXd>& x) {
  return x(kMarketWindow - 1);
}

VectorXd canonical_basis(const Eigen::Ref<const VectorXd>& x);
VectorXd extended_basis(const Eigen::Ref<const VectorXd>& x);

}  // namespace pstd
