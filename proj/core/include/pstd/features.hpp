#pragma once

// Trajectories and the windowed feature matrices built from them.
//
// A split point t divides a trajectory into a history window
// data[t - l_H, t) and a future window [t, t + l_T). The reward paired with
// split t is rewards[t], emitted by the latent state that produces the first
// future observation. Windows never straddle an episode boundary.

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pstd/linalg.hpp"

namespace pstd {

/// Fixed-policy run: one observation column and one reward per step.
///
/// Observations are stored as a (obs_dim x k) matrix; symbolic environments
/// use obs_dim = 1 with integral values. Episode boundaries are the indices
/// at which a new episode starts.
class Trajectory {
 public:
  Trajectory(MatrixXd observations, VectorXd rewards,
             std::vector<Index> episode_starts = {});

  static Trajectory from_symbols(std::span<const int> symbols,
                                 std::span<const double> rewards,
                                 std::vector<Index> episode_starts = {});

  Index size() const { return observations_.cols(); }
  Index observation_dim() const { return observations_.rows(); }
  const MatrixXd& observations() const { return observations_; }
  const VectorXd& rewards() const { return rewards_; }
  const std::vector<Index>& episode_starts() const { return episode_starts_; }

  /// Zero-based episode id of step t.
  Index episode_of(Index t) const;

  bool is_symbolic() const;
  /// Observation symbols; throws unless the trajectory is symbolic.
  std::vector<int> symbols() const;

 private:
  MatrixXd observations_;
  VectorXd rewards_;
  std::vector<Index> episode_starts_;
};

// Columnar CSV: step,observation,reward,episode_id. Vector observations are
// written as ';'-joined values.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& in);

/// Deterministic map from an observation window (obs_dim x length) to R^d.
class Featurizer {
 public:
  using Fn = std::function<VectorXd(const Eigen::Ref<const MatrixXd>&)>;

  Featurizer(std::string name, Index dim, Fn fn);

  Index dim() const { return dim_; }
  /// Identifies the featurizer and its parameters; used as a cache key.
  const std::string& name() const { return name_; }

  VectorXd operator()(const Eigen::Ref<const MatrixXd>& window) const;

 private:
  std::string name_;
  Index dim_;
  Fn fn_;
};

/// Flattens the window column by column.
Featurizer identity_featurizer(Index obs_dim, Index window_length);

/// Gaussian RBF on the flattened window encoding:
/// exp(-||enc(w) - enc(c_j)||^2 / (2 bandwidth^2)). Binary symbols are
/// already their own {0,1} encoding.
Featurizer rbf_featurizer(std::vector<MatrixXd> centers, double bandwidth);

/// Median Euclidean distance between distinct pairs of encoded centers; 1.0
/// when there is a single center or every pair coincides.
double median_pairwise_distance(const std::vector<MatrixXd>& centers);

/// Applies a single-step featurizer to each step of a window and
/// concatenates the results (dimension = length * per_step.dim()).
Featurizer stacked_featurizer(Featurizer per_step, Index length);

enum class WindowKind { kHistory, kFuture };

struct WindowSpec {
  Index history = 1;
  Index future = 1;
};

struct FeatureMatrix {
  MatrixXd values;  // features x samples
  WindowKind kind = WindowKind::kHistory;
  WindowSpec windows;
  std::vector<Index> indices;  // retained split points, increasing

  Index samples() const { return values.cols(); }
  Index features() const { return values.rows(); }
};

/// Split points whose history and future windows fit inside one episode.
std::vector<Index> split_points(const Trajectory& traj, WindowSpec windows);

FeatureMatrix window_features(const Trajectory& traj,
                              const Featurizer& featurizer, WindowKind kind,
                              WindowSpec windows);

/// Future features stacking a per-state featurizer over `windows.future`
/// steps starting at the split point.
FeatureMatrix stack_future_features(const Trajectory& traj,
                                    const Featurizer& per_state,
                                    WindowSpec windows);

}  // namespace pstd
