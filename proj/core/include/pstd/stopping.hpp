#pragma once

// Policy iteration for the early-exercise ("psychic call") stopping problem.

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "pstd/envs.hpp"
#include "pstd/learners.hpp"
#include "pstd/linalg.hpp"

namespace pstd {

enum class Decision { kStop, kContinue };

enum class BasisSet { kCanonical, kExtended };

Index basis_size(BasisSet basis);

/// Price path with cached extended basis features for every state.
/// State i corresponds to time 100 + i of the price series.
class MarketPath {
 public:
  explicit MarketPath(std::vector<double> prices);

  Index states() const { return features_.cols(); }
  const std::vector<double>& prices() const { return prices_; }

  /// x for state i (100 price ratios).
  VectorXd state(Index i) const;
  double payoff(Index i) const { return features_(1, i); }

  /// Extended basis (220 x states); canonical features are the first 16 rows.
  const MatrixXd& features() const { return features_; }
  Eigen::Ref<const VectorXd> features(Index i, BasisSet basis) const;

 private:
  std::vector<double> prices_;
  MatrixXd features_;
};

struct StoppingPolicy {
  struct Greedy {
    VectorXd weights;  // effective weights over the basis
    BasisSet basis = BasisSet::kCanonical;
  };
  struct Threshold {
    double level = 0.0;
  };
  struct StopNow {};
  struct NeverStop {};

  std::variant<NeverStop, StopNow, Threshold, Greedy> kind;

  static StoppingPolicy never_stop() { return {NeverStop{}}; }
  static StoppingPolicy stop_now() { return {StopNow{}}; }
  static StoppingPolicy threshold(double level);
  static StoppingPolicy greedy(const ValueFunction& vf, BasisSet basis);
};

/// Greedy: stop iff G(x) >= estimated value (ties stop).
Decision decide(const StoppingPolicy& policy,
                const Eigen::Ref<const VectorXd>& basis_features, double gain);
Decision decide(const StoppingPolicy& policy, const MarketState& s);

struct RelabelOptions {
  BasisSet basis = BasisSet::kCanonical;
  Index future_horizon = 5;
  Index restart_gap = 100;
};

/// Training tuples produced by following `policy` along the sample path.
struct TrainingData {
  MatrixXd history;       // basis features of visited states
  MatrixXd next_history;  // zero columns on stop
  MatrixXd future;        // [G, canonical16] of the next `future_horizon` states
  VectorXd reward;
  std::vector<bool> terminal;
  std::vector<Index> state_index;
  Index segments = 0;

  Index samples() const { return history.cols(); }
};

/// Row indices of G(x) inside the stacked future features.
std::vector<Index> future_reward_rows(Index future_horizon);

/// Follows the path while the policy continues (reward 0); on stop records
/// reward G(x) with zero successor features and restarts `restart_gap` steps
/// later. Requires at least 201 states.
TrainingData relabel_for_policy(const MarketPath& path,
                                const StoppingPolicy& policy,
                                const RelabelOptions& options = {});

struct MarketConfig {
  double sigma = 0.02;
  double rho = 0.0004;

  double gamma() const;
};

struct EvaluationConfig {
  MarketConfig market;
  Index paths = 1000;
  Index horizon_cap = 2000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

struct PolicyEvaluation {
  double mean = 0.0;  // discounted payoff gamma^tau G(x_tau)
  double standard_error = 0.0;
  double undiscounted_mean = 0.0;
  double undiscounted_stderr = 0.0;
  double mean_stopping_time = 0.0;
  double forced_fraction = 0.0;  // paths exercised at the horizon cap
};

/// Fresh paths, one generator per path derived from (seed, path index).
PolicyEvaluation evaluate_policy(const StoppingPolicy& policy,
                                 const EvaluationConfig& config);

struct StoppingLearnerConfig {
  LearnerKind kind = LearnerKind::kPstd;
  BasisSet basis = BasisSet::kExtended;
  Index dim = 16;
  Index future_horizon = 5;
  double value_scale_factor = 100.0;
};

struct IterationResult {
  Index iteration = 0;
  ValueFunction value;
  PolicyEvaluation evaluation;
  double stop_rate = 0.0;        // fraction of training states where greedy stops
  double changed_fraction = 1.0; // vs the previous policy's decisions
  Index samples = 0;
  double partition_gap = 0.0;    // relative, of this iteration's covariances
};

struct PolicyIterationOptions {
  Index max_iterations = 15;
  double change_tolerance = 1e-3;
  Index restart_gap = 100;
};

/// Starts from never-stop labelling; each round relabels, rebuilds
/// covariances, fits the learner and evaluates the resulting greedy policy.
std::vector<IterationResult> policy_iteration(
    const MarketPath& path, const StoppingLearnerConfig& learner,
    const EvaluationConfig& evaluation,
    const PolicyIterationOptions& options = {});

/// Fits one value function on relabelled data.
/// Covariances of relabelled data; the observation key is the stop flag.
CovarianceSet stopping_covariances(const TrainingData& data);

ValueFunction fit_stopping_value(const TrainingData& data,
                                 const StoppingLearnerConfig& learner,
                                 double gamma);

struct ThresholdChoice {
  StoppingPolicy policy;
  double level = 0.0;
  double training_payoff = 0.0;
  Index segments = 0;
};

/// Grid search on the training path; ties go to the lowest threshold.
ThresholdChoice best_threshold(const MarketPath& path,
                               std::span<const double> grid, double gamma,
                               Index horizon_cap = 2000,
                               Index restart_gap = 100);

/// Mean discounted training-path payoff of `policy`, segments restarted
/// `restart_gap` steps after each stop; unfinished tail segments are dropped.
double training_payoff(const MarketPath& path, const StoppingPolicy& policy,
                       double gamma, Index horizon_cap, Index restart_gap,
                       Index* segments = nullptr);

}  // namespace pstd
