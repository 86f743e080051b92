#include "pstd/experiments/pricing.hpp"

#include "pstd/envs.hpp"
#include "pstd/experiments/parallel.hpp"

namespace pstd::experiments {

namespace {

constexpr std::uint64_t kEvaluationStream = 0x6576616cULL;

}  // namespace

bool PricingSeedResult::ok() const {
  if (!error.empty()) return false;
  for (const auto& s : learners) {
    if (!s.error.empty()) return false;
  }
  return true;
}

PricingSeedResult run_pricing_seed(const PricingConfig& config,
                                   std::uint64_t seed,
                                   unsigned evaluation_workers) {
  PricingSeedResult out;
  out.seed = seed;
  EvaluationConfig eval;
  eval.market = {config.sigma, config.rho};
  eval.paths = config.eval_paths;
  eval.horizon_cap = config.horizon_cap;
  eval.seed = splitmix64(seed ^ kEvaluationStream);
  eval.workers = evaluation_workers;
  const double gamma = eval.market.gamma();

  std::optional<MarketPath> path;
  try {
    path.emplace(simulate_gbm(config.sigma, config.rho,
                              config.train_states + kMarketWindow, seed));
    out.stop_now = evaluate_policy(StoppingPolicy::stop_now(), eval);
    const auto grid = config.threshold_grid.levels();
    out.threshold = best_threshold(*path, grid, gamma, config.horizon_cap,
                                   config.restart_gap);
    out.threshold_evaluation = evaluate_policy(out.threshold.policy, eval);
  } catch (const Error& e) {
    out.error = e.what();
    if (!path) return out;
  }

  StoppingLearnerConfig learner;
  learner.basis = config.basis;
  learner.dim = config.dim;
  learner.future_horizon = config.future_horizon;
  learner.value_scale_factor = config.value_scale_factor;
  PolicyIterationOptions options;
  options.max_iterations = config.max_iterations;
  options.change_tolerance = config.change_tolerance;
  options.restart_gap = config.restart_gap;
  for (LearnerKind kind : config.learners) {
    PricingSeries series;
    series.kind = kind;
    learner.kind = kind;
    try {
      series.iterations = policy_iteration(*path, learner, eval, options);
    } catch (const Error& e) {
      series.error = e.what();
    }
    out.learners.push_back(std::move(series));
  }
  return out;
}

std::vector<PricingSeedResult> run_pricing(const PricingConfig& config,
                                           std::span<const std::uint64_t> seeds,
                                           unsigned workers) {
  std::vector<PricingSeedResult> out(seeds.size());
  // Parallelize over seeds when there are enough of them, otherwise over
  // evaluation paths; evaluation is bitwise independent of the worker count.
  const bool by_seed = seeds.size() >= workers;
  parallel_for(seeds.size(), by_seed ? workers : 1u, [&](std::size_t i) {
    out[i] = run_pricing_seed(config, seeds[i], by_seed ? 1u : workers);
  });
  return out;
}

}  // namespace pstd::experiments
