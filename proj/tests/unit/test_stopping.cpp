#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "pstd/error.hpp"
#include "pstd/stopping.hpp"

namespace pstd {
namespace {

MarketPath random_path(Index states, std::uint64_t seed) {
  return MarketPath(simulate_gbm(0.02, 0.0004, states + kMarketWindow, seed));
}

TEST(Decide, TrivialPolicies) {
  std::vector<double> p(101, 1.0);
  p[100] = 1.06;
  const MarketState s = market_state(p, 100);
  EXPECT_EQ(decide(StoppingPolicy::stop_now(), s), Decision::kStop);
  EXPECT_EQ(decide(StoppingPolicy::never_stop(), s), Decision::kContinue);
  EXPECT_EQ(decide(StoppingPolicy::threshold(1.05), s), Decision::kStop);
  EXPECT_EQ(decide(StoppingPolicy::threshold(1.07), s), Decision::kContinue);
  EXPECT_EQ(decide(StoppingPolicy::threshold(1.06), s), Decision::kStop);

  ValueFunction zero;
  zero.w = VectorXd::Zero(16);
  EXPECT_EQ(decide(StoppingPolicy::greedy(zero, BasisSet::kCanonical), s),
            Decision::kStop);
  EXPECT_THROW(StoppingPolicy::greedy(zero, BasisSet::kExtended), Error);
  EXPECT_THROW(StoppingPolicy::threshold(std::nan("")), Error);
}

TEST(Decide, GreedyTiesStop) {
  ValueFunction vf;
  vf.w = VectorXd::Zero(16);
  vf.w(0) = 1.0;  // value 1 everywhere
  const auto policy = StoppingPolicy::greedy(vf, BasisSet::kCanonical);
  std::vector<double> flat(101, 1.0);
  EXPECT_EQ(decide(policy, market_state(flat, 100)), Decision::kStop);
  flat[100] = 0.99;
  EXPECT_EQ(decide(policy, market_state(flat, 100)), Decision::kContinue);
}

TEST(MarketPath, CachesExtendedFeatures) {
  const auto path = random_path(300, 1);
  EXPECT_EQ(path.states(), 300);
  EXPECT_EQ(path.features().rows(), 220);
  const VectorXd x = path.state(17);
  EXPECT_EQ(path.features(17, BasisSet::kExtended), extended_basis(x));
  EXPECT_EQ(path.features(17, BasisSet::kCanonical), canonical_basis(x));
  EXPECT_EQ(path.payoff(17), x(99));
  EXPECT_THROW(MarketPath(std::vector<double>(100, 1.0)), Error);
}

TEST(Relabel, NeverStop) {
  const auto path = random_path(400, 2);
  const auto d = relabel_for_policy(path, StoppingPolicy::never_stop());
  EXPECT_TRUE((d.reward.array() == 0.0).all());
  EXPECT_EQ(std::count(d.terminal.begin(), d.terminal.end(), true), 0);
  EXPECT_EQ(d.segments, 1);
  EXPECT_EQ(d.samples(), 400 - 5 + 1);
  for (Index c = 0; c + 1 < d.samples(); ++c) {
    EXPECT_EQ(d.next_history.col(c), d.history.col(c + 1));
  }
  EXPECT_EQ(d.next_history.col(d.samples() - 1),
            path.features(d.state_index.back() + 1, BasisSet::kCanonical));
}

TEST(Relabel, StopNow) {
  const auto path = random_path(400, 3);
  const auto d = relabel_for_policy(path, StoppingPolicy::stop_now());
  EXPECT_EQ(std::count(d.terminal.begin(), d.terminal.end(), false), 0);
  EXPECT_TRUE((d.next_history.array() == 0.0).all());
  for (Index c = 0; c < d.samples(); ++c) {
    EXPECT_EQ(d.reward(c), path.payoff(d.state_index[static_cast<std::size_t>(c)]));
    if (c > 0) {
      EXPECT_EQ(d.state_index[static_cast<std::size_t>(c)] -
                    d.state_index[static_cast<std::size_t>(c - 1)],
                100);
    }
  }
  EXPECT_EQ(d.segments, d.samples());
}

TEST(Relabel, InfiniteThresholdEqualsNeverStop) {
  const auto path = random_path(300, 4);
  const auto a = relabel_for_policy(path, StoppingPolicy::never_stop());
  const auto b = relabel_for_policy(
      path, StoppingPolicy::threshold(std::numeric_limits<double>::infinity()));
  EXPECT_EQ(a.history, b.history);
  EXPECT_EQ(a.reward, b.reward);
  EXPECT_EQ(a.terminal, b.terminal);
}

TEST(Relabel, ConservationAndFutureLayout) {
  const auto path = random_path(3000, 5);
  const auto d = relabel_for_policy(path, StoppingPolicy::threshold(1.03),
                                    {BasisSet::kExtended, 5, 100});
  // Tuples are exactly the visited states: one run per segment ending in a
  // stop, except possibly the last.
  Index runs = 1;
  for (std::size_t c = 0; c + 1 < d.terminal.size(); ++c) {
    if (d.terminal[c]) {
      ++runs;
      EXPECT_EQ(d.state_index[c + 1], d.state_index[c] + 100);
    } else {
      EXPECT_EQ(d.state_index[c + 1], d.state_index[c] + 1);
      EXPECT_EQ(d.next_history.col(static_cast<Index>(c)),
                d.history.col(static_cast<Index>(c + 1)));
    }
  }
  EXPECT_EQ(runs, d.segments);
  EXPECT_EQ(d.future.rows(), 85);
  const auto rows = future_reward_rows(5);
  EXPECT_EQ(rows, (std::vector<Index>{0, 17, 34, 51, 68}));
  const Index s = d.state_index[3];
  for (Index h = 0; h < 5; ++h) {
    EXPECT_EQ(d.future(rows[static_cast<std::size_t>(h)], 3), path.payoff(s + h));
  }
}

TEST(Relabel, RequiresLongPath) {
  EXPECT_THROW(relabel_for_policy(random_path(200, 6), StoppingPolicy::never_stop()),
               Error);
}

TEST(Evaluate, StopNowMatchesGrowth) {
  EvaluationConfig cfg;
  cfg.paths = 2000;
  cfg.seed = 11;
  const auto e = evaluate_policy(StoppingPolicy::stop_now(), cfg);
  EXPECT_NEAR(e.mean, std::exp(0.04), 3.0 * e.standard_error);
  EXPECT_EQ(e.mean_stopping_time, 0.0);
  EXPECT_EQ(e.forced_fraction, 0.0);
}

TEST(Evaluate, DeterministicAndWorkerIndependent) {
  EvaluationConfig cfg;
  cfg.paths = 64;
  cfg.seed = 3;
  const auto policy = StoppingPolicy::threshold(1.02);
  const auto a = evaluate_policy(policy, cfg);
  cfg.workers = 4;
  const auto b = evaluate_policy(policy, cfg);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.standard_error, b.standard_error);
  EXPECT_EQ(a.mean_stopping_time, b.mean_stopping_time);
}

TEST(Evaluate, ZeroVolatilityDiscountsExactly) {
  EvaluationConfig cfg;
  cfg.market.sigma = 0.0;
  cfg.paths = 5;
  // Ratio after t days of drift is exp(100 rho) for every state, so a
  // threshold just above it never fires and the payoff is forced at the cap.
  cfg.horizon_cap = 37;
  const double g = std::exp(100 * cfg.market.rho);
  const auto e = evaluate_policy(StoppingPolicy::threshold(g + 1e-9), cfg);
  EXPECT_NEAR(e.mean, std::pow(cfg.market.gamma(), 37) * g, 1e-12);
  EXPECT_EQ(e.standard_error, 0.0);
  EXPECT_EQ(e.forced_fraction, 1.0);
  const auto now = evaluate_policy(StoppingPolicy::stop_now(), cfg);
  EXPECT_NEAR(now.mean, g, 1e-12);
}

TEST(Evaluate, NeverStopVanishesWithHorizon) {
  EvaluationConfig cfg;
  cfg.paths = 200;
  cfg.horizon_cap = 500;
  const double short_run = evaluate_policy(StoppingPolicy::never_stop(), cfg).mean;
  cfg.horizon_cap = 20000;
  const double long_run = evaluate_policy(StoppingPolicy::never_stop(), cfg).mean;
  EXPECT_LT(long_run, short_run);
  EXPECT_LT(long_run, 0.01);
}

TEST(Threshold, GridSearch) {
  const auto path = random_path(5000, 7);
  const double gamma = MarketConfig{}.gamma();
  const std::vector<double> one{1.1};
  EXPECT_EQ(best_threshold(path, one, gamma).level, 1.1);
  EXPECT_THROW(best_threshold(path, std::vector<double>{}, gamma), Error);

  std::vector<double> grid;
  for (int i = 0; i <= 30; ++i) grid.push_back(1.0 + 0.01 * i);
  const auto best = best_threshold(path, grid, gamma);
  for (double level : grid) {
    EXPECT_LE(training_payoff(path, StoppingPolicy::threshold(level), gamma,
                              2000, 100),
              best.training_payoff);
  }
}

TEST(Threshold, DegenerateMarketTiesGoLow) {
  const MarketPath path(simulate_gbm(0.0, 0.0004, 600, 1));
  const double g = std::exp(0.04);
  const std::vector<double> grid{1.03, 1.0, 1.02, g + 0.01};
  const auto best = best_threshold(path, grid, MarketConfig{}.gamma());
  EXPECT_EQ(best.level, 1.0);
  EXPECT_THROW(best_threshold(path, std::vector<double>{g + 0.01},
                              MarketConfig{}.gamma()),
               Error);
}

TEST(PolicyIteration, RunsAndReportsEveryIteration) {
  const auto path = random_path(4000, 8);
  EvaluationConfig eval;
  eval.paths = 50;
  StoppingLearnerConfig learner;
  learner.dim = 4;
  PolicyIterationOptions opts;
  opts.max_iterations = 3;
  const auto results = policy_iteration(path, learner, eval, opts);
  ASSERT_FALSE(results.empty());
  EXPECT_LE(results.size(), 3u);
  for (const auto& r : results) {
    EXPECT_TRUE(std::isfinite(r.evaluation.mean));
    EXPECT_EQ(r.value.w.size(), 4);
    EXPECT_GT(r.samples, 0);
  }
  learner.kind = LearnerKind::kLstd;
  learner.basis = BasisSet::kCanonical;
  const auto lstd_run = policy_iteration(path, learner, eval, opts);
  EXPECT_EQ(lstd_run.front().value.w.size(), 16);
}

TEST(PolicyIteration, UnsupportedLearnerCarriesIteration) {
  const auto path = random_path(400, 9);
  StoppingLearnerConfig learner;
  learner.kind = LearnerKind::kPstd2;
  try {
    policy_iteration(path, learner, EvaluationConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("iteration 0"), std::string::npos);
  }
}

TEST(Market, DiscountFromGrowthRate) {
  EXPECT_DOUBLE_EQ(MarketConfig{}.gamma(), std::exp(-0.0004));
}

}  // namespace
}  // namespace pstd
