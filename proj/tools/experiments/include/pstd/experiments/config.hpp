#pragma once

// Plain-text `key = value` experiment configuration with schema validation.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pstd/error.hpp"
#include "pstd/learners.hpp"
#include "pstd/stopping.hpp"

namespace pstd::experiments {

/// Raised for malformed or invalid configuration; `what()` carries
/// `source:line: message`.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorCode::kParse, what) {}
};

class RawConfig {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  /// Parses `key = value` lines; `#` starts a comment. Duplicate keys and
  /// malformed lines are rejected.
  static RawConfig parse(std::istream& in, std::string source);
  static RawConfig load(const std::filesystem::path& file);

  const std::string& source() const { return source_; }
  const std::map<std::string, Entry>& entries() const { return entries_; }
  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const Entry& at(const std::string& key) const;

  /// `key=value` lines in key order; the hashed identity of the config.
  std::string canonical() const;

  [[noreturn]] void error(const std::string& key,
                          const std::string& message) const;

 private:
  std::string source_;
  std::map<std::string, Entry> entries_;
};

enum class ExperimentId {
  kRrPomdpA,
  kRrPomdpB,
  kRrPomdpC,
  kPricing,
  kEquivalence,
  kOracles,
};

const char* to_string(ExperimentId id);

struct RrPomdpConfig {
  Index steps = 0;
  Index history_length = 0;
  Index future_length = 0;
  Index rbf_centers = 0;
  Index noise_features = 0;          // only for rrpomdp_B
  std::optional<double> bandwidth;   // empty: median pairwise distance
  std::vector<LearnerKind> learners;
  Index dim = 0;
};

struct ThresholdGrid {
  double start = 0.0;
  double step = 0.0;
  double stop = 0.0;
  std::vector<double> levels() const;
};

struct PricingConfig {
  Index train_states = 0;
  Index eval_paths = 0;
  double sigma = 0.0;
  double rho = 0.0;
  std::vector<LearnerKind> learners;
  BasisSet basis = BasisSet::kExtended;
  Index dim = 0;
  Index future_horizon = 0;
  double value_scale_factor = 0.0;
  Index max_iterations = 0;
  double change_tolerance = 0.0;
  Index restart_gap = 0;
  Index horizon_cap = 0;
  ThresholdGrid threshold_grid;
};

struct EquivalenceConfig {
  Index samples = 0;
  Index history_dim = 0;
  Index future_dim = 0;
  int symbols = 0;
  std::vector<Index> dims;
  double gamma = 0.0;
};

struct OraclesConfig {
  EquivalenceConfig random_system;
  Index filter_steps = 0;
  Index perturbations = 0;
  Index chain_small_samples = 0;
  Index chain_large_samples = 0;
};

struct ExperimentConfig {
  ExperimentId id = ExperimentId::kOracles;
  std::vector<std::uint64_t> seeds;
  std::optional<std::filesystem::path> output_dir;
  RrPomdpConfig rrpomdp;
  PricingConfig pricing;
  EquivalenceConfig equivalence;
  OraclesConfig oracles;
  std::string canonical;  // canonical text of the source config
};

/// Validates `raw` against the schema of its `experiment`; unknown keys,
/// missing keys and non-positive numbers raise ConfigError.
ExperimentConfig validate(const RawConfig& raw);
ExperimentConfig load_config(const std::filesystem::path& file);

/// Parses "1-5,8,10-12" into an increasing, duplicate-free list.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes,
                    std::uint64_t basis = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

}  // namespace pstd::experiments
