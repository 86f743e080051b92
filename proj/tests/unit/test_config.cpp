#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "pstd/experiments/config.hpp"
#include "pstd/experiments/runner.hpp"

namespace pstd::experiments {
namespace {

constexpr const char* kRrPomdpA = R"(# Fig. A
experiment = rrpomdp_A
seeds = 1-3, 7
steps = 1000
history_length = 5
future_length = 5
rbf_centers = 10
rbf_bandwidth = median
learners = lstd, pstd, pstd2
dim = 3
)";

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return validate(RawConfig::parse(in, "test.cfg"));
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, ParsesRrPomdp) {
  const auto c = parse(kRrPomdpA);
  EXPECT_EQ(c.id, ExperimentId::kRrPomdpA);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1, 2, 3, 7}));
  EXPECT_EQ(c.rrpomdp.steps, 1000);
  EXPECT_EQ(c.rrpomdp.rbf_centers, 10);
  EXPECT_FALSE(c.rrpomdp.bandwidth.has_value());
  ASSERT_EQ(c.rrpomdp.learners.size(), 3u);
  EXPECT_EQ(c.rrpomdp.learners[2], LearnerKind::kPstd2);
  EXPECT_FALSE(c.output_dir.has_value());
}

TEST(Config, UnknownKeyIsRejectedWithLine) {
  const std::string msg = error_of(std::string(kRrPomdpA) + "gamma = 0.9\n");
  EXPECT_NE(msg.find("test.cfg:11"), std::string::npos) << msg;
  EXPECT_NE(msg.find("unknown key 'gamma'"), std::string::npos) << msg;
}

TEST(Config, MissingScientificKeyIsAnError) {
  std::string text = kRrPomdpA;
  text.erase(text.find("dim = 3"));
  EXPECT_NE(error_of(text).find("missing required key 'dim'"), std::string::npos);
}

TEST(Config, MalformedLinesReportTheirLine) {
  EXPECT_NE(error_of("experiment = oracles\nthis is not a pair\n").find("test.cfg:2"),
            std::string::npos);
  EXPECT_NE(error_of("a = 1\na = 2\n").find("duplicate key 'a'"), std::string::npos);
  EXPECT_NE(error_of("a =\n").find("empty value"), std::string::npos);
}

TEST(Config, NumbersMustBePositive) {
  std::string text = kRrPomdpA;
  text.replace(text.find("steps = 1000"), 12, "steps = 0");
  const std::string msg = error_of(text);
  EXPECT_NE(msg.find("test.cfg:4: steps: must be positive"), std::string::npos) << msg;
  text = kRrPomdpA;
  text.replace(text.find("steps = 1000"), 12, "steps = 1e3");
  EXPECT_NE(error_of(text).find("expected an integer"), std::string::npos);
}

TEST(Config, NoiseFeaturesOnlyForExperimentB) {
  EXPECT_NE(error_of(std::string(kRrPomdpA) + "noise_features = 490\n")
                .find("unknown key"),
            std::string::npos);
  std::string b = kRrPomdpA;
  b.replace(b.find("rrpomdp_A"), 9, "rrpomdp_B");
  EXPECT_NE(error_of(b).find("noise_features"), std::string::npos);
  EXPECT_EQ(parse(b + "noise_features = 490\n").rrpomdp.noise_features, 490);
}

TEST(Config, UnknownLearnerAndExperiment) {
  std::string text = kRrPomdpA;
  text.replace(text.find("lstd, pstd, pstd2"), 17, "lstd, larstd");
  EXPECT_NE(error_of(text).find("unknown learner 'larstd'"), std::string::npos);
  EXPECT_NE(error_of("experiment = nope\nseeds = 1\n").find("unknown experiment"),
            std::string::npos);
}

TEST(Config, SeedLists) {
  EXPECT_EQ(parse_seed_list("3,1-2,2"), (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_THROW(parse_seed_list("5-2"), ConfigError);
  EXPECT_THROW(parse_seed_list("x"), ConfigError);
  EXPECT_THROW(parse_seed_list(","), ConfigError);
}

TEST(Config, PricingSchema) {
  const std::string text = R"(experiment = pricing
seeds = 1-10
train_states = 50000
eval_paths = 1000
sigma = 0.02
rho = 0.0004
learners = pstd, lstd
basis = extended
dim = 16
future_horizon = 5
value_scale_factor = 100
max_iterations = 10
change_tolerance = 0.001
restart_gap = 100
horizon_cap = 2000
threshold_grid = 1.00:0.01:1.30
output_dir = results/pricing
)";
  const auto c = parse(text);
  EXPECT_EQ(c.pricing.threshold_grid.levels().size(), 31u);
  EXPECT_DOUBLE_EQ(c.pricing.threshold_grid.levels().back(), 1.30);
  EXPECT_EQ(*c.output_dir, "results/pricing");
  std::string bad = text;
  bad.replace(bad.find("pstd, lstd"), 10, "pstd2");
  EXPECT_NE(error_of(bad).find("only lstd and pstd"), std::string::npos);
}

TEST(Config, CanonicalTextIgnoresLayout) {
  const auto a = parse(kRrPomdpA);
  std::string shuffled = "dim=3\n  # comment\n" + std::string(kRrPomdpA);
  shuffled.erase(shuffled.rfind("dim = 3"));
  EXPECT_EQ(parse(shuffled).canonical, a.canonical);
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(0xabc), "0000000000000abc");
}

TEST(Stats, MeanStderrAndMedian) {
  const auto ms = mean_stderr({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(ms.mean, 2.5);
  EXPECT_NEAR(ms.standard_error, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
  EXPECT_EQ(mean_stderr({2.0}).standard_error, 0.0);
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
}

}  // namespace
}  // namespace pstd::experiments
