#include "pstd/experiments/rrpomdp.hpp"

#include <random>

#include "pstd/compression.hpp"
#include "pstd/covariance.hpp"
#include "pstd/envs.hpp"
#include "pstd/experiments/parallel.hpp"
#include "pstd/features.hpp"
#include "pstd/learners.hpp"
#include "pstd/tpsr.hpp"

namespace pstd::experiments {

namespace {

constexpr std::uint64_t kCenterStream = 1;
constexpr std::uint64_t kNoiseStream = 2;

std::vector<Index> sample_indices(std::size_t pool, Index count,
                                  std::mt19937_64& rng) {
  std::vector<Index> out;
  if (static_cast<std::size_t>(count) <= pool) {
    std::vector<Index> all(pool);
    for (std::size_t i = 0; i < pool; ++i) all[i] = static_cast<Index>(i);
    for (Index i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(
          static_cast<std::size_t>(i), pool - 1);
      std::swap(all[static_cast<std::size_t>(i)], all[pick(rng)]);
    }
    out.assign(all.begin(), all.begin() + count);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, pool - 1);
    for (Index i = 0; i < count; ++i) out.push_back(static_cast<Index>(pick(rng)));
  }
  return out;
}

Featurizer sampled_rbf(const Trajectory& traj, const std::vector<Index>& points,
                       WindowKind kind, Index length, Index count,
                       const std::optional<double>& bandwidth,
                       std::mt19937_64& rng) {
  std::vector<MatrixXd> centers;
  for (Index i : sample_indices(points.size(), count, rng)) {
    const Index t = points[static_cast<std::size_t>(i)];
    const Index first = kind == WindowKind::kHistory ? t - length : t;
    centers.push_back(traj.observations().middleCols(first, length));
  }
  const double width = bandwidth ? *bandwidth : median_pairwise_distance(centers);
  return rbf_featurizer(std::move(centers), width);
}

void append_noise(FeatureMatrix& f, Index rows, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index d = f.values.rows();
  f.values.conservativeResize(d + rows, Eigen::NoChange);
  for (Index c = 0; c < f.values.cols(); ++c)
    for (Index r = 0; r < rows; ++r) f.values(d + r, c) = normal(rng);
}

std::string bytes_of(const MatrixXd& m) {
  return std::string(reinterpret_cast<const char*>(m.data()),
                     static_cast<std::size_t>(m.size()) * sizeof(double));
}

std::string bytes_of(const VectorXd& v) {
  return std::string(reinterpret_cast<const char*>(v.data()),
                     static_cast<std::size_t>(v.size()) * sizeof(double));
}

CovarianceSet cached_covariances(const std::optional<std::filesystem::path>& dir,
                                 std::uint64_t key, const FeatureMatrix& h,
                                 const FeatureMatrix& f,
                                 const std::vector<double>& rewards,
                                 const std::vector<int>& symbols, bool* hit) {
  *hit = false;
  if (!dir) return build_covariance_set(h, f, rewards, symbols);
  namespace fs = std::filesystem;
  const fs::path entry = *dir / ("cov-" + hex64(key));
  if (fs::exists(entry / "meta.txt")) {
    *hit = true;
    return load_covariance_set(entry);
  }
  CovarianceSet cs = build_covariance_set(h, f, rewards, symbols);
  // Write beside the final location, then publish with a rename so a
  // concurrent reader never sees a partial entry.
  const fs::path tmp =
      *dir / ("cov-" + hex64(key) + ".tmp" +
              hex64((std::uint64_t{std::random_device{}()} << 32) ^
                    std::random_device{}()));
  fs::create_directories(tmp);
  save_covariance_set(cs, tmp);
  std::error_code ec;
  fs::rename(tmp, entry, ec);
  if (ec) fs::remove_all(tmp, ec);
  return cs;
}

// Value estimates at every sampled history. PSTD2 has no history
// compressor: its state comes from filtering the history window with the
// correlated TPSR, started from b1 like the exact belief filter.
VectorXd predict_values(LearnerKind kind, const CovarianceSet& cs, Index dim,
                        double gamma, const FeatureMatrix& h,
                        const std::vector<int>& symbols) {
  ValueFunction vf;
  switch (kind) {
    case LearnerKind::kLstd:
      vf = lstd(cs, gamma);
      break;
    case LearnerKind::kPstd:
      vf = pstd(cs, fit_subspace(cs, dim).v_hat, gamma);
      break;
    case LearnerKind::kTpsr:
      vf = tpsr_value_function(learn_tpsr(cs, fit_subspace(cs, dim).u_hat, gamma));
      break;
    case LearnerKind::kPstd2: {
      const MatrixXd u = fit_subspace(cs, dim).u_hat;
      const ValueFunction w = pstd2(cs, u, gamma);
      const TpsrModel model = learn_tpsr_correlated(cs, u, gamma);
      const Index len = h.windows.history;
      VectorXd out(h.samples());
      for (Index c = 0; c < h.samples(); ++c) {
        const Index t = h.indices[static_cast<std::size_t>(c)];
        VectorXd b = model.b1;
        for (Index i = t - len; i < t; ++i) {
          b = filter(model, b, symbols[static_cast<std::size_t>(i)]);
        }
        out(c) = w.w.dot(b);
      }
      return out;
    }
  }
  const VectorXd weights = effective_weights(vf);
  require(weights.size() == h.features(), ErrorCode::kShapeMismatch,
          "value function does not act on history features");
  return (weights.transpose() * h.values).transpose();
}

}  // namespace

bool RrPomdpSeedResult::ok() const {
  if (!error.empty()) return false;
  for (const auto& l : learners) {
    if (!l.ok) return false;
  }
  return true;
}

RrPomdpSeedResult run_rrpomdp_seed(
    const RrPomdpConfig& config, std::uint64_t seed,
    const std::optional<std::filesystem::path>& cache_dir) {
  RrPomdpSeedResult out;
  out.seed = seed;
  const PomdpSpec spec = rr_pomdp_spec();
  const WindowSpec windows{config.history_length, config.future_length};
  FeatureMatrix h, f;
  CovarianceSet cs;
  std::vector<int> symbols;
  try {
    const Trajectory traj = simulate_pomdp(spec, config.steps, seed);
    symbols = traj.symbols();
    const auto points = split_points(traj, windows);
    std::mt19937_64 center_rng(splitmix64(seed) + kCenterStream);
    const Featurizer rbf_h =
        sampled_rbf(traj, points, WindowKind::kHistory, windows.history,
                    config.rbf_centers, config.bandwidth, center_rng);
    const Featurizer rbf_f =
        sampled_rbf(traj, points, WindowKind::kFuture, windows.future,
                    config.rbf_centers, config.bandwidth, center_rng);
    h = window_features(traj, rbf_h, WindowKind::kHistory, windows);
    f = window_features(traj, rbf_f, WindowKind::kFuture, windows);
    const std::uint64_t noise_seed = splitmix64(seed) + kNoiseStream;
    if (config.noise_features > 0) {
      std::mt19937_64 noise_rng(noise_seed);
      append_noise(h, config.noise_features, noise_rng);
      append_noise(f, config.noise_features, noise_rng);
    }
    const std::vector<double> rewards(traj.rewards().data(),
                                      traj.rewards().data() + traj.size());

    std::uint64_t key = fnv1a(bytes_of(traj.observations()));
    key = fnv1a(bytes_of(traj.rewards()), key);
    key = fnv1a(rbf_h.name() + "|" + rbf_f.name() + "|" +
                    std::to_string(windows.history) + "," +
                    std::to_string(windows.future) + "|noise:" +
                    std::to_string(config.noise_features) + ":" +
                    std::to_string(noise_seed),
                key);
    cs = cached_covariances(cache_dir, key, h, f, rewards, symbols,
                            &out.cache_hit);
    out.samples = cs.samples;
    out.partition_gap = partition_gap(cs) / std::max(1.0, max_abs(cs.hplus_h));
  } catch (const Error& e) {
    out.error = e.what();
    return out;
  }

  // Ground truth: exact belief value after each sampled history window.
  VectorXd truth(h.samples());
  for (Index c = 0; c < h.samples(); ++c) {
    const Index t = h.indices[static_cast<std::size_t>(c)];
    const std::span<const int> window(symbols.data() + (t - windows.history),
                                      static_cast<std::size_t>(windows.history));
    truth(c) = history_true_value(spec, window);
  }

  for (LearnerKind kind : config.learners) {
    LearnerOutcome o;
    o.kind = kind;
    try {
      const VectorXd predicted =
          predict_values(kind, cs, config.dim, spec.gamma, h, symbols);
      require(predicted.allFinite(), ErrorCode::kDivergentValue,
              "non-finite value estimate");
      o.mse = (predicted - truth).squaredNorm() / static_cast<double>(truth.size());
      o.ok = true;
    } catch (const Error& e) {
      o.error = e.what();
    }
    out.learners.push_back(std::move(o));
  }
  return out;
}

std::vector<RrPomdpSeedResult> run_rrpomdp(
    const RrPomdpConfig& config, std::span<const std::uint64_t> seeds,
    unsigned workers, const std::optional<std::filesystem::path>& cache_dir) {
  std::vector<RrPomdpSeedResult> out(seeds.size());
  parallel_for(seeds.size(), workers, [&](std::size_t i) {
    out[i] = run_rrpomdp_seed(config, seeds[i], cache_dir);
  });
  return out;
}

}  // namespace pstd::experiments
