#include "pstd/covariance.hpp"

#include <fstream>
#include <sstream>
#include <set>
#include <string>

#include "pstd/error.hpp"
#include "pstd/matrix_io.hpp"

namespace pstd {

namespace {

constexpr Index kBlock = 2048;

// Sum of x_b y_b^T over fixed column blocks; block order is fixed so the
// result is bitwise reproducible.
MatrixXd blocked_outer(const MatrixXd& x, const MatrixXd& y) {
  MatrixXd acc = MatrixXd::Zero(x.rows(), y.rows());
  for (Index start = 0; start < x.cols(); start += kBlock) {
    const Index n = std::min(kBlock, x.cols() - start);
    acc.noalias() += x.middleCols(start, n) * y.middleCols(start, n).transpose();
  }
  return acc;
}

}  // namespace

TransitionSet make_transitions(const FeatureMatrix& histories,
                               const FeatureMatrix& futures,
                               std::span<const double> rewards,
                               std::span<const int> observations) {
  require(histories.indices == futures.indices, ErrorCode::kShapeMismatch,
          "make_transitions: history and future indices differ");
  require(histories.samples() == static_cast<Index>(histories.indices.size()),
          ErrorCode::kShapeMismatch, "make_transitions: index set size");
  std::vector<Index> keep;  // positions j with indices[j+1] == indices[j] + 1
  const auto& idx = histories.indices;
  for (std::size_t j = 0; j + 1 < idx.size(); ++j) {
    if (idx[j + 1] == idx[j] + 1) keep.push_back(static_cast<Index>(j));
  }
  require(!keep.empty(), ErrorCode::kEmptySample,
          "make_transitions: no split point has a retained successor");

  const auto n = static_cast<Index>(keep.size());
  TransitionSet ts;
  ts.history.resize(histories.features(), n);
  ts.next_history.resize(histories.features(), n);
  ts.future.resize(futures.features(), n);
  ts.next_future.resize(futures.features(), n);
  ts.reward.resize(n);
  ts.symbol.resize(static_cast<std::size_t>(n));
  ts.indices.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const Index j = keep[static_cast<std::size_t>(i)];
    const Index t = idx[static_cast<std::size_t>(j)];
    require(t < static_cast<Index>(rewards.size()), ErrorCode::kShapeMismatch,
            "make_transitions: rewards shorter than trajectory");
    ts.history.col(i) = histories.values.col(j);
    ts.next_history.col(i) = histories.values.col(j + 1);
    ts.future.col(i) = futures.values.col(j);
    ts.next_future.col(i) = futures.values.col(j + 1);
    ts.reward(i) = rewards[static_cast<std::size_t>(t)];
    if (observations.empty()) {
      ts.symbol[static_cast<std::size_t>(i)] = 0;
    } else {
      require(t < static_cast<Index>(observations.size()),
              ErrorCode::kShapeMismatch,
              "make_transitions: observations shorter than trajectory");
      ts.symbol[static_cast<std::size_t>(i)] =
          observations[static_cast<std::size_t>(t)];
    }
    ts.indices[static_cast<std::size_t>(i)] = t;
  }
  return ts;
}

MatrixXd cov(const MatrixXd& x, const MatrixXd& y) {
  require(x.cols() == y.cols(), ErrorCode::kShapeMismatch,
          "cov: column counts differ");
  require(x.cols() >= 1, ErrorCode::kEmptySample, "cov: no samples");
  return blocked_outer(x, y) / static_cast<double>(x.cols());
}

MatrixXd shifted_cov(const FeatureMatrix& h) {
  require(h.samples() == static_cast<Index>(h.indices.size()),
          ErrorCode::kShapeMismatch, "shifted_cov: index set size");
  std::vector<Index> pairs;
  for (std::size_t j = 0; j + 1 < h.indices.size(); ++j) {
    if (h.indices[j + 1] == h.indices[j] + 1) {
      pairs.push_back(static_cast<Index>(j));
    }
  }
  require(!pairs.empty(), ErrorCode::kEmptySample,
          "shifted_cov: no adjacent pairs");
  const auto n = static_cast<Index>(pairs.size());
  MatrixXd cur(h.features(), n), next(h.features(), n);
  for (Index i = 0; i < n; ++i) {
    cur.col(i) = h.values.col(pairs[static_cast<std::size_t>(i)]);
    next.col(i) = h.values.col(pairs[static_cast<std::size_t>(i)] + 1);
  }
  return cov(next, cur);
}

std::map<int, MatrixXd> indicator_cov(const MatrixXd& a, const MatrixXd& h,
                                      std::span<const int> symbols) {
  require(a.cols() == h.cols() &&
              static_cast<Index>(symbols.size()) == h.cols(),
          ErrorCode::kShapeMismatch, "indicator_cov: inputs not aligned");
  require(h.cols() >= 1, ErrorCode::kEmptySample, "indicator_cov: no samples");
  const std::set<int> alphabet(symbols.begin(), symbols.end());
  const double k = static_cast<double>(h.cols());
  std::map<int, MatrixXd> out;
  MatrixXd masked(a.rows(), a.cols());
  for (int o : alphabet) {
    for (Index t = 0; t < a.cols(); ++t) {
      if (symbols[static_cast<std::size_t>(t)] == o) {
        masked.col(t) = a.col(t);
      } else {
        masked.col(t).setZero();
      }
    }
    out[o] = blocked_outer(masked, h) / k;
  }
  return out;
}

CovarianceSet build_covariance_set(const TransitionSet& s) {
  const Index k = s.samples();
  require(k >= 1, ErrorCode::kEmptySample, "build_covariance_set: no samples");
  require(s.next_history.cols() == k && s.future.cols() == k &&
              s.reward.size() == k &&
              static_cast<Index>(s.symbol.size()) == k &&
              (s.next_future.size() == 0 || s.next_future.cols() == k),
          ErrorCode::kShapeMismatch, "build_covariance_set: misaligned inputs");
  CovarianceSet cs;
  cs.samples = k;
  cs.hh = cov(s.history, s.history);
  cs.hh = 0.5 * (cs.hh + cs.hh.transpose());
  cs.th = cov(s.future, s.history);
  cs.tt = cov(s.future, s.future);
  cs.tt = 0.5 * (cs.tt + cs.tt.transpose());
  cs.rh = cov(s.reward.transpose(), s.history);
  cs.h_o_h = indicator_cov(s.next_history, s.history, s.symbol);
  cs.hplus_h = cov(s.next_history, s.history);
  if (s.next_future.size() != 0) {
    cs.t_o_h = indicator_cov(s.next_future, s.history, s.symbol);
  }
  cs.h_mean = s.history.rowwise().mean();
  cs.t_mean = s.future.rowwise().mean();
  return cs;
}

CovarianceSet build_covariance_set(const FeatureMatrix& histories,
                                   const FeatureMatrix& futures,
                                   std::span<const double> rewards,
                                   std::span<const int> observations) {
  return build_covariance_set(
      make_transitions(histories, futures, rewards, observations));
}

double partition_gap(const CovarianceSet& cs) {
  MatrixXd sum = MatrixXd::Zero(cs.hplus_h.rows(), cs.hplus_h.cols());
  for (const auto& [o, m] : cs.h_o_h) sum += m;
  return max_abs(sum - cs.hplus_h);
}

void save_covariance_set(const CovarianceSet& cs,
                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_matrix(dir / "hh.mat", cs.hh);
  save_matrix(dir / "th.mat", cs.th);
  save_matrix(dir / "tt.mat", cs.tt);
  save_matrix(dir / "rh.mat", cs.rh);
  save_matrix(dir / "hplus_h.mat", cs.hplus_h);
  save_matrix(dir / "h_mean.mat", cs.h_mean);
  save_matrix(dir / "t_mean.mat", cs.t_mean);
  std::ofstream meta(dir / "meta.txt");
  require(static_cast<bool>(meta), ErrorCode::kIo,
          "cannot write " + (dir / "meta.txt").string());
  meta << "samples " << cs.samples << '\n';
  meta << "h_o_h";
  for (const auto& [o, m] : cs.h_o_h) meta << ' ' << o;
  meta << "\nt_o_h";
  for (const auto& [o, m] : cs.t_o_h) meta << ' ' << o;
  meta << '\n';
  for (const auto& [o, m] : cs.h_o_h) {
    save_matrix(dir / ("h_o_h." + std::to_string(o) + ".mat"), m);
  }
  for (const auto& [o, m] : cs.t_o_h) {
    save_matrix(dir / ("t_o_h." + std::to_string(o) + ".mat"), m);
  }
}

CovarianceSet load_covariance_set(const std::filesystem::path& dir) {
  std::ifstream meta(dir / "meta.txt");
  require(static_cast<bool>(meta), ErrorCode::kIo,
          "cannot read " + (dir / "meta.txt").string());
  CovarianceSet cs;
  std::string tag, line;
  require(static_cast<bool>(meta >> tag >> cs.samples) && tag == "samples",
          ErrorCode::kParse, "covariance meta: missing sample count");
  std::getline(meta, line);
  auto read_keys = [&](const std::string& expected) {
    std::vector<int> keys;
    require(static_cast<bool>(std::getline(meta, line)), ErrorCode::kParse,
            "covariance meta: missing " + expected);
    std::istringstream is(line);
    is >> tag;
    require(tag == expected, ErrorCode::kParse,
            "covariance meta: expected " + expected);
    int o;
    while (is >> o) keys.push_back(o);
    return keys;
  };
  const auto hoh_keys = read_keys("h_o_h");
  const auto toh_keys = read_keys("t_o_h");

  cs.hh = load_matrix(dir / "hh.mat");
  cs.th = load_matrix(dir / "th.mat");
  cs.tt = load_matrix(dir / "tt.mat");
  const MatrixXd rh = load_matrix(dir / "rh.mat");
  require(rh.rows() == 1, ErrorCode::kParse, "covariance: rh must be a row");
  cs.rh = rh.row(0);
  cs.hplus_h = load_matrix(dir / "hplus_h.mat");
  cs.h_mean = load_matrix(dir / "h_mean.mat").col(0);
  cs.t_mean = load_matrix(dir / "t_mean.mat").col(0);
  for (int o : hoh_keys) {
    cs.h_o_h[o] = load_matrix(dir / ("h_o_h." + std::to_string(o) + ".mat"));
  }
  for (int o : toh_keys) {
    cs.t_o_h[o] = load_matrix(dir / ("t_o_h." + std::to_string(o) + ".mat"));
  }
  const Index dh = cs.hh.rows();
  require(cs.hh.cols() == dh && cs.th.cols() == dh && cs.rh.size() == dh &&
              cs.hplus_h.rows() == dh && cs.hplus_h.cols() == dh &&
              cs.tt.rows() == cs.th.rows(),
          ErrorCode::kShapeMismatch, "covariance: inconsistent shapes on load");
  return cs;
}

}  // namespace pstd
