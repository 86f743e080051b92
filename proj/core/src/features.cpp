#include "pstd/features.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "pstd/error.hpp"

namespace pstd {

namespace {

bool all_finite(const MatrixXd& m) { return m.allFinite(); }

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, Index line) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::kParse, "trajectory csv line " + std::to_string(line) +
                                ": bad number '" + s + "'");
  }
}

}  // namespace

Trajectory::Trajectory(MatrixXd observations, VectorXd rewards,
                       std::vector<Index> episode_starts)
    : observations_(std::move(observations)),
      rewards_(std::move(rewards)) {
  const Index k = observations_.cols();
  require(k >= 1, ErrorCode::kEmptySample, "trajectory: no steps");
  require(observations_.rows() >= 1, ErrorCode::kInvalidArgument,
          "trajectory: zero-dimensional observations");
  require(rewards_.size() == k, ErrorCode::kShapeMismatch,
          "trajectory: observations and rewards differ in length");
  require(all_finite(observations_) && rewards_.allFinite(),
          ErrorCode::kInvalidArgument, "trajectory: non-finite data");
  Index prev = -1;
  for (Index b : episode_starts) {
    require(b > prev, ErrorCode::kInvalidArgument,
            "trajectory: episode boundaries must be strictly increasing");
    require(b >= 0 && b <= k, ErrorCode::kInvalidArgument,
            "trajectory: episode boundary out of range");
    prev = b;
    if (b > 0 && b < k) episode_starts_.push_back(b);
  }
}

Trajectory Trajectory::from_symbols(std::span<const int> symbols,
                                    std::span<const double> rewards,
                                    std::vector<Index> episode_starts) {
  MatrixXd obs(1, static_cast<Index>(symbols.size()));
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    obs(0, static_cast<Index>(i)) = symbols[i];
  }
  VectorXd r(static_cast<Index>(rewards.size()));
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    r(static_cast<Index>(i)) = rewards[i];
  }
  return Trajectory(std::move(obs), std::move(r), std::move(episode_starts));
}

Index Trajectory::episode_of(Index t) const {
  require(t >= 0 && t < size(), ErrorCode::kInvalidArgument,
          "trajectory: step out of range");
  return static_cast<Index>(
      std::upper_bound(episode_starts_.begin(), episode_starts_.end(), t) -
      episode_starts_.begin());
}

bool Trajectory::is_symbolic() const {
  if (observations_.rows() != 1) return false;
  for (Index t = 0; t < size(); ++t) {
    const double v = observations_(0, t);
    if (v != std::round(v)) return false;
  }
  return true;
}

std::vector<int> Trajectory::symbols() const {
  require(is_symbolic(), ErrorCode::kInvalidArgument,
          "trajectory: observations are not symbols");
  std::vector<int> out(static_cast<std::size_t>(size()));
  for (Index t = 0; t < size(); ++t) {
    out[static_cast<std::size_t>(t)] = static_cast<int>(observations_(0, t));
  }
  return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "step,observation,reward,episode_id\n";
  for (Index t = 0; t < traj.size(); ++t) {
    out << t << ',';
    for (Index i = 0; i < traj.observation_dim(); ++i) {
      if (i) out << ';';
      out << format_double(traj.observations()(i, t));
    }
    out << ',' << format_double(traj.rewards()(t)) << ','
        << traj.episode_of(t) << '\n';
  }
}

Trajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::kParse,
          "trajectory csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == "step,observation,reward,episode_id", ErrorCode::kParse,
          "trajectory csv: unexpected header '" + line + "'");

  std::vector<std::vector<double>> obs;
  std::vector<double> rewards;
  std::vector<Index> starts;
  Index prev_episode = 0;
  Index line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    require(cols.size() == 4, ErrorCode::kParse,
            "trajectory csv line " + std::to_string(line_no) +
                ": expected 4 columns");
    const auto step = static_cast<Index>(parse_double(cols[0], line_no));
    require(step == static_cast<Index>(obs.size()), ErrorCode::kParse,
            "trajectory csv line " + std::to_string(line_no) +
                ": steps must be consecutive from 0");
    std::vector<double> o;
    for (const auto& part : split(cols[1], ';')) {
      o.push_back(parse_double(part, line_no));
    }
    require(obs.empty() || o.size() == obs.front().size(), ErrorCode::kParse,
            "trajectory csv line " + std::to_string(line_no) +
                ": observation dimension changed");
    const auto episode = static_cast<Index>(parse_double(cols[3], line_no));
    if (!obs.empty() && episode != prev_episode) {
      require(episode == prev_episode + 1, ErrorCode::kParse,
              "trajectory csv line " + std::to_string(line_no) +
                  ": episode ids must increase by one");
      starts.push_back(step);
    }
    require(!obs.empty() || episode == 0, ErrorCode::kParse,
            "trajectory csv: first episode id must be 0");
    prev_episode = episode;
    obs.push_back(std::move(o));
    rewards.push_back(parse_double(cols[2], line_no));
  }
  require(!obs.empty(), ErrorCode::kEmptySample, "trajectory csv: no rows");

  const auto k = static_cast<Index>(obs.size());
  const auto d = static_cast<Index>(obs.front().size());
  MatrixXd m(d, k);
  VectorXd r(k);
  for (Index t = 0; t < k; ++t) {
    for (Index i = 0; i < d; ++i) m(i, t) = obs[t][i];
    r(t) = rewards[t];
  }
  return Trajectory(std::move(m), std::move(r), std::move(starts));
}

Featurizer::Featurizer(std::string name, Index dim, Fn fn)
    : name_(std::move(name)), dim_(dim), fn_(std::move(fn)) {
  require(dim_ >= 1, ErrorCode::kInvalidArgument,
          "featurizer: dimension must be positive");
  require(static_cast<bool>(fn_), ErrorCode::kInvalidArgument,
          "featurizer: empty function");
}

VectorXd Featurizer::operator()(const Eigen::Ref<const MatrixXd>& window) const {
  VectorXd out = fn_(window);
  require(out.size() == dim_, ErrorCode::kShapeMismatch,
          "featurizer " + name_ + ": output dimension changed");
  return out;
}

Featurizer identity_featurizer(Index obs_dim, Index window_length) {
  require(obs_dim >= 1 && window_length >= 1, ErrorCode::kInvalidArgument,
          "identity_featurizer: sizes must be positive");
  const Index dim = obs_dim * window_length;
  return Featurizer(
      "identity:" + std::to_string(obs_dim) + "x" +
          std::to_string(window_length),
      dim, [obs_dim, window_length](const Eigen::Ref<const MatrixXd>& w) {
        require(w.rows() == obs_dim && w.cols() == window_length,
                ErrorCode::kShapeMismatch, "identity_featurizer: bad window");
        return VectorXd(w.reshaped());
      });
}

Featurizer rbf_featurizer(std::vector<MatrixXd> centers, double bandwidth) {
  require(!centers.empty(), ErrorCode::kInvalidArgument,
          "rbf_featurizer: no centers");
  require(bandwidth > 0.0 && std::isfinite(bandwidth),
          ErrorCode::kInvalidArgument, "rbf_featurizer: bandwidth must be > 0");
  const Index rows = centers.front().rows();
  const Index cols = centers.front().cols();
  const auto n = static_cast<Index>(centers.size());
  MatrixXd encoded(rows * cols, n);
  for (Index j = 0; j < n; ++j) {
    const MatrixXd& c = centers[static_cast<std::size_t>(j)];
    require(c.rows() == rows && c.cols() == cols, ErrorCode::kShapeMismatch,
            "rbf_featurizer: centers differ in window shape");
    encoded.col(j) = c.reshaped();
  }

  std::ostringstream name;
  name.precision(17);
  name << "rbf:" << rows << "x" << cols << ":bw=" << bandwidth << ":c=";
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < encoded.rows(); ++i) name << encoded(i, j) << ' ';
    name << '|';
  }

  const double scale = 1.0 / (2.0 * bandwidth * bandwidth);
  return Featurizer(
      name.str(), n,
      [encoded, rows, cols, scale](const Eigen::Ref<const MatrixXd>& w) {
        require(w.rows() == rows && w.cols() == cols, ErrorCode::kShapeMismatch,
                "rbf_featurizer: window shape differs from centers");
        const VectorXd x = w.reshaped();
        VectorXd out(encoded.cols());
        for (Index j = 0; j < encoded.cols(); ++j) {
          out(j) = std::exp(-(x - encoded.col(j)).squaredNorm() * scale);
        }
        return out;
      });
}

double median_pairwise_distance(const std::vector<MatrixXd>& centers) {
  std::vector<double> d;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    for (std::size_t j = i + 1; j < centers.size(); ++j) {
      require(centers[i].rows() == centers[j].rows() &&
                  centers[i].cols() == centers[j].cols(),
              ErrorCode::kShapeMismatch,
              "median_pairwise_distance: centers differ in window shape");
      d.push_back((centers[i] - centers[j]).norm());
    }
  }
  if (d.empty()) return 1.0;
  std::sort(d.begin(), d.end());
  const std::size_t m = d.size() / 2;
  const double med = d.size() % 2 ? d[m] : 0.5 * (d[m - 1] + d[m]);
  return med > 0.0 ? med : 1.0;
}

Featurizer stacked_featurizer(Featurizer per_step, Index length) {
  require(length >= 1, ErrorCode::kInvalidArgument,
          "stacked_featurizer: length must be positive");
  const Index d = per_step.dim();
  std::string name =
      "stack:" + std::to_string(length) + ":" + per_step.name();
  return Featurizer(
      std::move(name), d * length,
      [per_step = std::move(per_step), length,
       d](const Eigen::Ref<const MatrixXd>& w) {
        require(w.cols() == length, ErrorCode::kShapeMismatch,
                "stacked_featurizer: window length differs");
        VectorXd out(d * length);
        for (Index i = 0; i < length; ++i) {
          out.segment(i * d, d) = per_step(w.col(i));
        }
        return out;
      });
}

std::vector<Index> split_points(const Trajectory& traj, WindowSpec windows) {
  require(windows.history >= 1 && windows.future >= 1,
          ErrorCode::kInvalidArgument, "window horizons must be positive");
  std::vector<Index> out;
  std::vector<Index> bounds{0};
  bounds.insert(bounds.end(), traj.episode_starts().begin(),
                traj.episode_starts().end());
  bounds.push_back(traj.size());
  for (std::size_t e = 0; e + 1 < bounds.size(); ++e) {
    const Index begin = bounds[e];
    const Index end = bounds[e + 1];
    for (Index t = begin + windows.history; t + windows.future <= end; ++t) {
      out.push_back(t);
    }
  }
  return out;
}

namespace {

std::vector<Index> checked_split_points(const Trajectory& traj,
                                        WindowSpec windows) {
  require(windows.history >= 1 && windows.future >= 1,
          ErrorCode::kInvalidArgument, "window horizons must be positive");
  require(traj.size() >= windows.history + windows.future + 1,
          ErrorCode::kEmptySample,
          "trajectory shorter than history + future + 1 steps");
  auto idx = split_points(traj, windows);
  require(!idx.empty(), ErrorCode::kEmptySample,
          "no split point fits inside an episode");
  return idx;
}

}  // namespace

FeatureMatrix window_features(const Trajectory& traj,
                              const Featurizer& featurizer, WindowKind kind,
                              WindowSpec windows) {
  FeatureMatrix fm;
  fm.kind = kind;
  fm.windows = windows;
  fm.indices = checked_split_points(traj, windows);
  const auto n = static_cast<Index>(fm.indices.size());
  fm.values.resize(featurizer.dim(), n);
  const MatrixXd& obs = traj.observations();
  for (Index j = 0; j < n; ++j) {
    const Index t = fm.indices[static_cast<std::size_t>(j)];
    if (kind == WindowKind::kHistory) {
      fm.values.col(j) =
          featurizer(obs.middleCols(t - windows.history, windows.history));
    } else {
      fm.values.col(j) = featurizer(obs.middleCols(t, windows.future));
    }
  }
  require(fm.values.allFinite(), ErrorCode::kInvalidArgument,
          "featurizer produced non-finite values");
  return fm;
}

FeatureMatrix stack_future_features(const Trajectory& traj,
                                    const Featurizer& per_state,
                                    WindowSpec windows) {
  return window_features(traj, stacked_featurizer(per_state, windows.future),
                         WindowKind::kFuture, windows);
}

}  // namespace pstd
