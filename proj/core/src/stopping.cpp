#include "pstd/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "pstd/compression.hpp"
#include "pstd/covariance.hpp"
#include "pstd/error.hpp"

namespace pstd {

namespace {

constexpr Index kPerStateFuture = 1 + kCanonicalBasisSize;  // [G, canonical]

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

VectorXd basis_of(const VectorXd& x, BasisSet basis) {
  return basis == BasisSet::kCanonical ? canonical_basis(x)
                                       : extended_basis(x);
}

// Decisions for every state of the path.
std::vector<Decision> path_decisions(const MarketPath& path,
                                     const StoppingPolicy& policy) {
  std::vector<Decision> out(static_cast<std::size_t>(path.states()));
  const BasisSet basis = std::holds_alternative<StoppingPolicy::Greedy>(
                             policy.kind)
                             ? std::get<StoppingPolicy::Greedy>(policy.kind).basis
                             : BasisSet::kCanonical;
  for (Index i = 0; i < path.states(); ++i) {
    out[static_cast<std::size_t>(i)] =
        decide(policy, path.features(i, basis), path.payoff(i));
  }
  return out;
}

}  // namespace

Index basis_size(BasisSet basis) {
  return basis == BasisSet::kCanonical ? kCanonicalBasisSize
                                       : kExtendedBasisSize;
}

MarketPath::MarketPath(std::vector<double> prices) : prices_(std::move(prices)) {
  require(static_cast<Index>(prices_.size()) > kMarketWindow,
          ErrorCode::kInvalidArgument,
          "market path needs more than 100 prices");
  const Index n = static_cast<Index>(prices_.size()) - kMarketWindow;
  features_.resize(kExtendedBasisSize, n);
  for (Index i = 0; i < n; ++i) {
    features_.col(i) = extended_basis(state(i));
  }
}

VectorXd MarketPath::state(Index i) const {
  return market_state(prices_, kMarketWindow + i).x;
}

Eigen::Ref<const VectorXd> MarketPath::features(Index i, BasisSet basis) const {
  require(i >= 0 && i < states(), ErrorCode::kInvalidArgument,
          "market path: state index out of range");
  return features_.col(i).head(basis_size(basis));
}

StoppingPolicy StoppingPolicy::threshold(double level) {
  require(!std::isnan(level), ErrorCode::kInvalidArgument,
          "threshold level is NaN");
  return {Threshold{level}};
}

StoppingPolicy StoppingPolicy::greedy(const ValueFunction& vf, BasisSet basis) {
  VectorXd w = effective_weights(vf);
  require(w.size() == basis_size(basis), ErrorCode::kShapeMismatch,
          "greedy policy: value function does not act on the basis");
  require(w.allFinite(), ErrorCode::kDivergentValue,
          "greedy policy: weights not finite");
  return {Greedy{std::move(w), basis}};
}

Decision decide(const StoppingPolicy& policy,
                const Eigen::Ref<const VectorXd>& basis_features, double gain) {
  return std::visit(
      Overloaded{
          [](const StoppingPolicy::NeverStop&) { return Decision::kContinue; },
          [](const StoppingPolicy::StopNow&) { return Decision::kStop; },
          [gain](const StoppingPolicy::Threshold& t) {
            return gain >= t.level ? Decision::kStop : Decision::kContinue;
          },
          [&](const StoppingPolicy::Greedy& g) {
            require(basis_features.size() == g.weights.size(),
                    ErrorCode::kShapeMismatch,
                    "greedy policy: basis dimension differs");
            return gain >= g.weights.dot(basis_features) ? Decision::kStop
                                                         : Decision::kContinue;
          }},
      policy.kind);
}

Decision decide(const StoppingPolicy& policy, const MarketState& s) {
  if (const auto* g = std::get_if<StoppingPolicy::Greedy>(&policy.kind)) {
    return decide(policy, basis_of(s.x, g->basis), payoff(s));
  }
  return decide(policy, VectorXd(), payoff(s));
}

std::vector<Index> future_reward_rows(Index future_horizon) {
  std::vector<Index> rows;
  for (Index k = 0; k < future_horizon; ++k) rows.push_back(k * kPerStateFuture);
  return rows;
}

TrainingData relabel_for_policy(const MarketPath& path,
                                const StoppingPolicy& policy,
                                const RelabelOptions& options) {
  require(path.states() >= 2 * kMarketWindow + 1, ErrorCode::kInvalidArgument,
          "relabel: path needs at least 201 states");
  require(options.future_horizon >= 1 && options.restart_gap >= 1,
          ErrorCode::kInvalidArgument, "relabel: horizons must be positive");
  const Index n = path.states();
  const Index horizon = options.future_horizon;
  const Index d = basis_size(options.basis);
  const auto decisions = path_decisions(path, policy);

  std::vector<Index> visited;
  std::vector<bool> terminal;
  Index segments = 0;
  Index i = 0;
  bool fresh = true;
  // A sample needs its successor and a full future window inside the path.
  const Index last = n - std::max<Index>(horizon, 2);
  while (i <= last) {
    if (fresh) {
      ++segments;
      fresh = false;
    }
    const bool stop = decisions[static_cast<std::size_t>(i)] == Decision::kStop;
    visited.push_back(i);
    terminal.push_back(stop);
    if (stop) {
      i += options.restart_gap;
      fresh = true;
    } else {
      ++i;
    }
  }
  require(!visited.empty(), ErrorCode::kEmptySample, "relabel: no samples");

  const auto k = static_cast<Index>(visited.size());
  TrainingData out;
  out.history.resize(d, k);
  out.next_history.setZero(d, k);
  out.future.resize(horizon * kPerStateFuture, k);
  out.reward.setZero(k);
  out.terminal = terminal;
  out.state_index = visited;
  out.segments = segments;
  const MatrixXd& f = path.features();
  for (Index c = 0; c < k; ++c) {
    const Index s = visited[static_cast<std::size_t>(c)];
    out.history.col(c) = f.col(s).head(d);
    if (terminal[static_cast<std::size_t>(c)]) {
      out.reward(c) = path.payoff(s);
    } else {
      out.next_history.col(c) = f.col(s + 1).head(d);
    }
    for (Index h = 0; h < horizon; ++h) {
      out.future(h * kPerStateFuture, c) = path.payoff(s + h);
      out.future.block(h * kPerStateFuture + 1, c, kCanonicalBasisSize, 1) =
          f.col(s + h).head(kCanonicalBasisSize);
    }
  }
  return out;
}

double MarketConfig::gamma() const { return std::exp(-rho); }

PolicyEvaluation evaluate_policy(const StoppingPolicy& policy,
                                 const EvaluationConfig& config) {
  require(config.paths >= 1, ErrorCode::kInvalidArgument,
          "evaluate_policy: need at least one path");
  require(config.horizon_cap >= 0, ErrorCode::kInvalidArgument,
          "evaluate_policy: negative horizon cap");
  const double gamma = config.market.gamma();
  const auto n = static_cast<std::size_t>(config.paths);
  std::vector<double> discounted(n), raw(n), tau(n);
  std::vector<char> forced(n, 0);

  auto run_path = [&](std::size_t p) {
    const std::uint64_t seed =
        splitmix64(config.seed ^ splitmix64(static_cast<std::uint64_t>(p)));
    const auto prices =
        simulate_gbm(config.market.sigma, config.market.rho,
                     kMarketWindow + config.horizon_cap + 1, seed);
    Index t = 0;
    for (;; ++t) {
      const MarketState s = market_state(prices, kMarketWindow + t);
      const bool cap = t == config.horizon_cap;
      if (cap || decide(policy, s) == Decision::kStop) {
        const double g = payoff(s);
        raw[p] = g;
        discounted[p] = std::pow(gamma, static_cast<double>(t)) * g;
        tau[p] = static_cast<double>(t);
        forced[p] = cap && decide(policy, s) != Decision::kStop;
        return;
      }
    }
  };

  const unsigned workers =
      std::max(1u, std::min<unsigned>(config.workers, static_cast<unsigned>(n)));
  if (workers == 1) {
    for (std::size_t p = 0; p < n; ++p) run_path(p);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t p = w; p < n; p += workers) run_path(p);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  auto mean_se = [](const std::vector<double>& v, double& mean, double& se) {
    const double m = static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += x;
    mean = s / m;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    se = v.size() > 1 ? std::sqrt(ss / (m - 1.0) / m) : 0.0;
  };
  PolicyEvaluation out;
  mean_se(discounted, out.mean, out.standard_error);
  mean_se(raw, out.undiscounted_mean, out.undiscounted_stderr);
  double unused = 0.0;
  mean_se(tau, out.mean_stopping_time, unused);
  out.forced_fraction =
      static_cast<double>(std::count(forced.begin(), forced.end(), 1)) /
      static_cast<double>(n);
  return out;
}

CovarianceSet stopping_covariances(const TrainingData& data) {
  TransitionSet ts;
  ts.history = data.history;
  ts.next_history = data.next_history;
  ts.future = data.future;
  ts.reward = data.reward;
  ts.indices = data.state_index;
  ts.symbol.reserve(data.terminal.size());
  for (bool stop : data.terminal) ts.symbol.push_back(stop ? 1 : 0);
  return build_covariance_set(ts);
}

ValueFunction fit_stopping_value(const TrainingData& data,
                                 const StoppingLearnerConfig& learner,
                                 double gamma) {
  require(data.samples() >= 1, ErrorCode::kEmptySample,
          "fit_stopping_value: no samples");
  require(data.history.rows() == basis_size(learner.basis),
          ErrorCode::kShapeMismatch,
          "fit_stopping_value: training data uses a different basis");
  const CovarianceSet cs = stopping_covariances(data);
  switch (learner.kind) {
    case LearnerKind::kLstd:
      return lstd(cs, gamma);
    case LearnerKind::kPstd: {
      const Scaling scaling =
          Scaling::value_directed(learner.value_scale_factor,
                                  future_reward_rows(learner.future_horizon));
      const Subspace sub = fit_subspace(cs, learner.dim, scaling);
      return pstd(cs, sub.v_hat, gamma);
    }
    default:
      fail(ErrorCode::kInvalidArgument,
           std::string("stopping: learner '") + to_string(learner.kind) +
               "' cannot drive a greedy policy");
  }
}

std::vector<IterationResult> policy_iteration(
    const MarketPath& path, const StoppingLearnerConfig& learner,
    const EvaluationConfig& evaluation, const PolicyIterationOptions& options) {
  require(options.max_iterations >= 1, ErrorCode::kInvalidArgument,
          "policy_iteration: need at least one iteration");
  const double gamma = evaluation.market.gamma();
  StoppingPolicy policy = StoppingPolicy::never_stop();
  std::vector<Decision> previous = path_decisions(path, policy);
  std::vector<IterationResult> out;
  for (Index it = 0; it < options.max_iterations; ++it) {
    IterationResult r;
    r.iteration = it;
    try {
      const TrainingData data = relabel_for_policy(
          path, policy,
          {learner.basis, learner.future_horizon, options.restart_gap});
      r.samples = data.samples();
      r.value = fit_stopping_value(data, learner, gamma);
      const CovarianceSet cs = stopping_covariances(data);
      r.partition_gap = partition_gap(cs) /
                        std::max(1.0, cs.hplus_h.cwiseAbs().maxCoeff());
      policy = StoppingPolicy::greedy(r.value, learner.basis);
    } catch (const Error& e) {
      fail(e.code(), "policy iteration " + std::to_string(it) + ": " + e.what());
    }
    const auto decisions = path_decisions(path, policy);
    Index changed = 0, stops = 0;
    for (std::size_t i = 0; i < decisions.size(); ++i) {
      changed += decisions[i] != previous[i];
      stops += decisions[i] == Decision::kStop;
    }
    const double n = static_cast<double>(decisions.size());
    r.changed_fraction = static_cast<double>(changed) / n;
    r.stop_rate = static_cast<double>(stops) / n;
    r.evaluation = evaluate_policy(policy, evaluation);
    previous = decisions;
    out.push_back(std::move(r));
    if (it > 0 && out.back().changed_fraction < options.change_tolerance) break;
  }
  return out;
}

double training_payoff(const MarketPath& path, const StoppingPolicy& policy,
                       double gamma, Index horizon_cap, Index restart_gap,
                       Index* segments) {
  require(horizon_cap >= 0 && restart_gap >= 1, ErrorCode::kInvalidArgument,
          "training_payoff: bad horizon or gap");
  const auto decisions = path_decisions(path, policy);
  const Index n = path.states();
  double total = 0.0;
  Index done = 0;
  Index start = 0;
  while (start < n) {
    Index stop_at = -1;
    for (Index t = 0; start + t < n; ++t) {
      if (t == horizon_cap ||
          decisions[static_cast<std::size_t>(start + t)] == Decision::kStop) {
        stop_at = t;
        break;
      }
    }
    if (stop_at < 0) break;  // unfinished tail segment
    total += std::pow(gamma, static_cast<double>(stop_at)) *
             path.payoff(start + stop_at);
    ++done;
    start += stop_at + restart_gap;
  }
  require(done > 0, ErrorCode::kEmptySample,
          "training_payoff: no segment finished on the training path");
  if (segments) *segments = done;
  return total / static_cast<double>(done);
}

ThresholdChoice best_threshold(const MarketPath& path,
                               std::span<const double> grid, double gamma,
                               Index horizon_cap, Index restart_gap) {
  require(!grid.empty(), ErrorCode::kInvalidArgument,
          "best_threshold: empty grid");
  ThresholdChoice best;
  bool have = false;
  for (double level : grid) {
    const StoppingPolicy p = StoppingPolicy::threshold(level);
    Index segs = 0;
    double v = 0.0;
    try {
      v = training_payoff(path, p, gamma, horizon_cap, restart_gap, &segs);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptySample) throw;
      continue;  // level never triggers on the training path
    }
    if (!have || v > best.training_payoff ||
        (v == best.training_payoff && level < best.level)) {
      best = {p, level, v, segs};
      have = true;
    }
  }
  require(have, ErrorCode::kEmptySample,
          "best_threshold: no level finished a segment");
  return best;
}

}  // namespace pstd
