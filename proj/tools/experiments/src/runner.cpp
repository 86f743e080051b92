#include "pstd/experiments/runner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "pstd/experiments/oracles.hpp"
#include "pstd/experiments/parallel.hpp"
#include "pstd/experiments/pricing.hpp"
#include "pstd/experiments/rrpomdp.hpp"

namespace pstd::experiments {

namespace fs = std::filesystem;

namespace {

constexpr double kEquivalenceTolerance = 1e-8;

// Shortest text that round-trips to the same double.
std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string csv_field(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') {
      out += "\"\"";
    } else if (c == '\n' || c == '\r') {
      out += ' ';
    } else {
      out += c;
    }
  }
  return out + "\"";
}

class CsvWriter {
 public:
  CsvWriter(const fs::path& file, const std::vector<std::string>& header)
      : out_(file, std::ios::binary) {
    require(static_cast<bool>(out_), ErrorCode::kIo,
            "cannot write " + file.string());
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      out_ << (i ? "," : "") << cells[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

void write_manifest(const fs::path& dir, const ExperimentConfig& config,
                    const RunReport& report,
                    const std::vector<std::pair<std::string, std::string>>& extra) {
  std::ofstream out(dir / "manifest.txt", std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write manifest");
  std::string seeds;
  for (std::size_t i = 0; i < config.seeds.size(); ++i) {
    seeds += (i ? "," : "") + std::to_string(config.seeds[i]);
  }
  out << "experiment=" << to_string(config.id) << '\n'
      << "config_hash=fnv1a64:" << hex64(fnv1a(config.canonical)) << '\n'
      << "seed_count=" << config.seeds.size() << '\n'
      << "seeds=" << seeds << '\n'
      << "version=" << library_version() << '\n'
      << "runs=" << report.runs << '\n'
      << "failures=" << report.failures << '\n';
  for (const auto& [k, v] : extra) out << k << '=' << v << '\n';
}

void log_line(const RunOptions& options, const std::string& line) {
  if (options.log) *options.log << line << '\n';
}

std::string learner_list(const std::vector<LearnerKind>& kinds) {
  std::string out;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    out += (i ? "," : "") + std::string(to_string(kinds[i]));
  }
  return out;
}

RunReport run_rrpomdp_experiment(const ExperimentConfig& config,
                                 const RunOptions& options) {
  const auto& rc = config.rrpomdp;
  const auto results =
      run_rrpomdp(rc, config.seeds, options.workers, options.cache_dir);
  RunReport report;
  CsvWriter per_seed(options.out / "per_seed.csv",
                     {"seed", "learner", "status", "mse", "samples",
                      "partition_gap", "message"});
  std::map<LearnerKind, std::vector<double>> mse;
  std::map<LearnerKind, Index> failed;
  for (const auto& r : results) {
    for (std::size_t i = 0; i < rc.learners.size(); ++i) {
      const LearnerKind kind = rc.learners[i];
      ++report.runs;
      const LearnerOutcome* o = r.error.empty() ? &r.learners[i] : nullptr;
      const bool ok = o && o->ok;
      const std::string message = o ? o->error : r.error;
      per_seed.row({std::to_string(r.seed), to_string(kind), ok ? "ok" : "failed",
                    ok ? num(o->mse) : "", std::to_string(r.samples),
                    r.error.empty() ? num(r.partition_gap) : "", csv_field(message)});
      if (ok) {
        mse[kind].push_back(o->mse);
      } else {
        ++failed[kind];
        ++report.failures;
        report.messages.push_back("seed " + std::to_string(r.seed) + " " +
                                  to_string(kind) + ": " + message);
      }
    }
  }
  CsvWriter aggregate(options.out / "aggregate.csv",
                      {"learner", "succeeded", "failed", "mean_mse",
                       "stderr_mse", "median_mse"});
  for (LearnerKind kind : rc.learners) {
    const auto& v = mse[kind];
    const MeanStderr ms = mean_stderr(v);
    aggregate.row({to_string(kind), std::to_string(v.size()),
                   std::to_string(failed[kind]), v.empty() ? "" : num(ms.mean),
                   v.empty() ? "" : num(ms.standard_error),
                   v.empty() ? "" : num(median(v))});
    log_line(options, std::string(to_string(kind)) + ": median MSE " +
                          (v.empty() ? "n/a" : num(median(v))) + " over " +
                          std::to_string(v.size()) + " seeds");
  }
  write_manifest(options.out, config, report,
                 {{"features", std::to_string(rc.rbf_centers + rc.noise_features)},
                  {"learners", learner_list(rc.learners)}});
  return report;
}

std::vector<std::string> evaluation_cells(const PolicyEvaluation& e) {
  return {num(e.mean), num(e.standard_error), num(e.undiscounted_mean),
          num(e.mean_stopping_time), num(e.forced_fraction)};
}

RunReport run_pricing_experiment(const ExperimentConfig& config,
                                 const RunOptions& options) {
  const auto& pc = config.pricing;
  const auto results = run_pricing(pc, config.seeds, options.workers);
  RunReport report;
  CsvWriter per_seed(
      options.out / "per_seed.csv",
      {"seed", "series", "iteration", "status", "mean", "stderr",
       "undiscounted_mean", "mean_stopping_time", "forced_fraction",
       "stop_rate", "changed_fraction", "samples", "partition_gap",
       "threshold_level", "message"});
  // series -> iteration -> per-seed means
  std::map<std::string, std::map<Index, std::vector<double>>> curves;
  std::map<std::string, std::vector<double>> finals;
  for (const auto& r : results) {
    const std::string seed = std::to_string(r.seed);
    ++report.runs;
    if (!r.error.empty()) {
      ++report.failures;
      report.messages.push_back("seed " + seed + " baselines: " + r.error);
      per_seed.row({seed, "baselines", "", "failed", "", "", "", "", "", "", "",
                    "", "", "", csv_field(r.error)});
    } else {
      auto row = evaluation_cells(r.stop_now);
      per_seed.row({seed, "stop_now", "0", "ok", row[0], row[1], row[2], row[3],
                    row[4], "", "", "", "", "", csv_field("")});
      row = evaluation_cells(r.threshold_evaluation);
      per_seed.row({seed, "threshold", "0", "ok", row[0], row[1], row[2], row[3],
                    row[4], "", "", std::to_string(r.threshold.segments), "",
                    num(r.threshold.level), csv_field("")});
      curves["stop_now"][0].push_back(r.stop_now.mean);
      curves["threshold"][0].push_back(r.threshold_evaluation.mean);
    }
    for (const auto& s : r.learners) {
      const std::string name = to_string(s.kind);
      ++report.runs;
      for (const auto& it : s.iterations) {
        const auto cells = evaluation_cells(it.evaluation);
        per_seed.row({seed, name, std::to_string(it.iteration + 1), "ok",
                      cells[0], cells[1], cells[2], cells[3], cells[4],
                      num(it.stop_rate), num(it.changed_fraction),
                      std::to_string(it.samples), num(it.partition_gap), "",
                      csv_field("")});
        curves[name][it.iteration + 1].push_back(it.evaluation.mean);
      }
      if (!s.error.empty()) {
        ++report.failures;
        report.messages.push_back("seed " + seed + " " + name + ": " + s.error);
        per_seed.row({seed, name, "", "failed", "", "", "", "", "", "", "", "",
                      "", "", csv_field(s.error)});
      } else if (!s.iterations.empty()) {
        finals[name].push_back(s.iterations.back().evaluation.mean);
      }
    }
  }
  CsvWriter aggregate(options.out / "aggregate.csv",
                      {"series", "iteration", "succeeded", "mean", "stderr"});
  std::vector<std::string> order{"stop_now", "threshold"};
  for (LearnerKind k : pc.learners) order.push_back(to_string(k));
  for (const auto& name : order) {
    for (const auto& [iteration, values] : curves[name]) {
      const MeanStderr ms = mean_stderr(values);
      aggregate.row({name, std::to_string(iteration), std::to_string(values.size()),
                     num(ms.mean), num(ms.standard_error)});
    }
    if (finals.count(name)) {
      const MeanStderr ms = mean_stderr(finals[name]);
      aggregate.row({name, "final", std::to_string(finals[name].size()),
                     num(ms.mean), num(ms.standard_error)});
      log_line(options, name + ": final payoff " + num(ms.mean) + " +- " +
                            num(ms.standard_error));
    }
  }
  write_manifest(options.out, config, report,
                 {{"learners", learner_list(pc.learners)},
                  {"train_states", std::to_string(pc.train_states)},
                  {"eval_paths", std::to_string(pc.eval_paths)}});
  return report;
}

RunReport run_equivalence_experiment(const ExperimentConfig& config,
                                     const RunOptions& options) {
  const auto& ec = config.equivalence;
  struct Cell {
    std::uint64_t seed;
    Index dim;
    EquivalenceMeasure m;
    std::string error;
  };
  std::vector<Cell> cells;
  for (std::uint64_t s : config.seeds)
    for (Index n : ec.dims) cells.push_back({s, n, {}, {}});
  parallel_for(cells.size(), options.workers, [&](std::size_t i) {
    EquivalenceConfig one = ec;
    one.dims = {cells[i].dim};
    const std::uint64_t seed[] = {cells[i].seed};
    try {
      cells[i].m = measure_equivalence(one, seed);
    } catch (const Error& e) {
      cells[i].error = e.what();
    }
  });

  RunReport report;
  CsvWriter per_seed(options.out / "per_seed.csv",
                     {"seed", "dim", "status", "weight_gap", "effective_gap",
                      "partition_gap", "message"});
  std::map<Index, std::vector<double>> gaps;
  std::map<Index, double> effective;
  double worst = 0.0;
  for (const auto& c : cells) {
    ++report.runs;
    const bool pass = c.error.empty() && c.m.max_weight_gap <= kEquivalenceTolerance;
    if (!pass) {
      ++report.failures;
      report.messages.push_back("seed " + std::to_string(c.seed) + " dim " +
                                std::to_string(c.dim) + ": " +
                                (c.error.empty() ? "gap " + num(c.m.max_weight_gap)
                                                 : c.error));
    }
    if (!c.error.empty()) {
      worst = INFINITY;
      per_seed.row({std::to_string(c.seed), std::to_string(c.dim), "failed", "",
                    "", "", csv_field(c.error)});
      continue;
    }
    worst = std::max(worst, c.m.max_weight_gap);
    gaps[c.dim].push_back(c.m.max_weight_gap);
    effective[c.dim] = std::max(effective[c.dim], c.m.max_effective_gap);
    per_seed.row({std::to_string(c.seed), std::to_string(c.dim),
                  pass ? "pass" : "fail", num(c.m.max_weight_gap),
                  num(c.m.max_effective_gap), num(c.m.max_partition_gap),
                  csv_field("")});
  }
  CsvWriter aggregate(options.out / "aggregate.csv",
                      {"dim", "cases", "max_weight_gap", "mean_weight_gap",
                       "stderr_weight_gap", "max_effective_gap"});
  for (const auto& [dim, v] : gaps) {
    const MeanStderr ms = mean_stderr(v);
    aggregate.row({std::to_string(dim), std::to_string(v.size()),
                   num(*std::max_element(v.begin(), v.end())), num(ms.mean),
                   num(ms.standard_error), num(effective[dim])});
  }
  log_line(options, "max |w_pstd - w_tpsr| = " + num(worst) + " over " +
                        std::to_string(report.runs) + " cases: " +
                        (report.failures == 0 ? "PASS" : "FAIL") +
                        " (tolerance " + num(kEquivalenceTolerance) + ")");
  write_manifest(options.out, config, report,
                 {{"max_weight_gap", num(worst)},
                  {"tolerance", num(kEquivalenceTolerance)}});
  return report;
}

struct OracleCheck {
  std::string name;
  double value;
  std::string comparator;  // "<=" or ">="
  double bound;
  bool pass() const {
    return comparator == "<=" ? value <= bound : value >= bound;
  }
};

RunReport run_oracles_experiment(const ExperimentConfig& config,
                                 const RunOptions& options) {
  const auto& oc = config.oracles;
  const auto& seeds = config.seeds;
  struct PerSeed {
    EquivalenceMeasure eq;
    StationarityMeasure st;
    FilterMeasure filter;
    std::string error;
  };
  std::vector<PerSeed> per(seeds.size());
  parallel_for(seeds.size(), options.workers, [&](std::size_t i) {
    const std::uint64_t one[] = {seeds[i]};
    try {
      per[i].eq = measure_equivalence(oc.random_system, one);
      per[i].st = measure_stationarity(oc.random_system, one, oc.perturbations);
      per[i].filter = measure_tpsr_filter(one, oc.filter_steps);
    } catch (const Error& e) {
      per[i].error = e.what();
    }
  });

  RunReport report;
  std::vector<OracleCheck> checks;
  CsvWriter per_seed(options.out / "per_seed.csv", {"seed", "oracle", "value"});
  double eq = 0, grad = 0, fd = 0, filt = 0, gap = 0;
  Index violations = 0;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const std::string s = std::to_string(seeds[i]);
    if (!per[i].error.empty()) {
      ++report.failures;
      report.messages.push_back("seed " + s + ": " + per[i].error);
      per_seed.row({s, std::string("error"), csv_field(per[i].error)});
      continue;
    }
    const auto& p = per[i];
    per_seed.row({s, "equivalence_weight_gap", num(p.eq.max_weight_gap)});
    per_seed.row({s, "rrr_gradient_norm", num(p.st.max_gradient_norm)});
    per_seed.row({s, "rrr_fd_relative_error", num(p.st.max_fd_relative_error)});
    per_seed.row({s, "rrr_perturbation_violations",
                  std::to_string(p.st.perturbation_violations)});
    per_seed.row({s, "tpsr_filter_error", num(p.filter.max_prediction_error)});
    eq = std::max(eq, p.eq.max_weight_gap);
    grad = std::max(grad, p.st.max_gradient_norm);
    fd = std::max(fd, p.st.max_fd_relative_error);
    filt = std::max(filt, p.filter.max_prediction_error);
    violations += p.st.perturbation_violations;
    gap = std::max({gap, p.eq.max_partition_gap, p.st.max_partition_gap,
                    p.filter.max_partition_gap});
  }
  checks.push_back({"equivalence_weight_gap", eq, "<=", 1e-8});
  checks.push_back({"rrr_gradient_norm", grad, "<=", 1e-8});
  checks.push_back({"rrr_fd_relative_error", fd, "<=", 1e-5});
  checks.push_back({"rrr_perturbation_violations", static_cast<double>(violations),
                    "<=", 0.0});
  checks.push_back({"tpsr_filter_error", filt, "<=", 1e-6});

  const auto chain =
      measure_lstd_chain(seeds, oc.chain_small_samples, oc.chain_large_samples);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const std::string s = std::to_string(seeds[i]);
    per_seed.row({s, "lstd_chain_small_error", num(chain.small_sample_error[i])});
    per_seed.row({s, "lstd_chain_large_error", num(chain.large_sample_error[i])});
  }
  checks.push_back({"lstd_chain_analytic_error", chain.analytic_error, "<=", 1e-10});
  checks.push_back({"lstd_chain_improved_fraction",
                    static_cast<double>(chain.improved) /
                        static_cast<double>(seeds.size()),
                    ">=", 0.95});
  const auto rank = measure_rr_pomdp_rank();
  checks.push_back({"rr_pomdp_sigma4_over_sigma1", rank.ratio, "<=", 1e-8});
  gap = std::max({gap, chain.max_partition_gap, rank.max_partition_gap});
  checks.push_back({"partition_gap", gap, "<=", 1e-12});

  CsvWriter aggregate(options.out / "aggregate.csv",
                      {"oracle", "value", "comparator", "bound", "status"});
  for (const auto& c : checks) {
    ++report.runs;
    if (!c.pass()) {
      ++report.failures;
      report.messages.push_back(c.name + " = " + num(c.value));
    }
    aggregate.row({c.name, num(c.value), c.comparator, num(c.bound),
                   c.pass() ? "pass" : "fail"});
    log_line(options, (c.pass() ? "PASS " : "FAIL ") + c.name + " = " +
                          num(c.value) + " (" + c.comparator + " " +
                          num(c.bound) + ")");
  }
  write_manifest(options.out, config, report, {});
  return report;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::map<std::string, std::string>> read_table(const fs::path& file) {
  std::ifstream in(file);
  require(static_cast<bool>(in), ErrorCode::kIo,
          "missing results: " + file.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::kIo,
          "empty results file: " + file.string());
  const auto header = split_csv(line);
  std::vector<std::map<std::string, std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    require(cells.size() == header.size(), ErrorCode::kParse,
            "malformed row in " + file.string());
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size(); ++i) row[header[i]] = cells[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

std::map<std::string, std::string> read_manifest(const fs::path& file) {
  std::ifstream in(file);
  require(static_cast<bool>(in), ErrorCode::kIo,
          "missing results: " + file.string());
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

}  // namespace

const char* library_version() { return PSTD_VERSION_STRING; }

MeanStderr mean_stderr(const std::vector<double>& values) {
  MeanStderr out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  for (double v : values) out.mean += v;
  out.mean /= n;
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.standard_error = std::sqrt(ss / (n - 1.0) / n);
  return out;
}

double median(std::vector<double> values) {
  require(!values.empty(), ErrorCode::kEmptySample, "median of no values");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

RunReport run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  fs::create_directories(options.out);
  if (options.cache_dir) fs::create_directories(*options.cache_dir);
  switch (config.id) {
    case ExperimentId::kRrPomdpA:
    case ExperimentId::kRrPomdpB:
    case ExperimentId::kRrPomdpC:
      return run_rrpomdp_experiment(config, options);
    case ExperimentId::kPricing:
      return run_pricing_experiment(config, options);
    case ExperimentId::kEquivalence:
      return run_equivalence_experiment(config, options);
    case ExperimentId::kOracles:
      return run_oracles_experiment(config, options);
  }
  fail(ErrorCode::kInvalidArgument, "unknown experiment");
}

std::vector<fs::path> emit_plot_data(const fs::path& results_dir) {
  const auto manifest = read_manifest(results_dir / "manifest.txt");
  const auto it = manifest.find("experiment");
  require(it != manifest.end(), ErrorCode::kParse,
          "manifest without experiment id: " + results_dir.string());
  const std::string& id = it->second;
  const auto rows = read_table(results_dir / "aggregate.csv");

  struct Point {
    std::string series, x, mean, stderr_;
  };
  std::vector<Point> points;
  if (id.rfind("rrpomdp_", 0) == 0) {
    const std::string x = manifest.count("features") ? manifest.at("features") : "0";
    for (const auto& r : rows) {
      if (r.at("mean_mse").empty()) continue;
      points.push_back({r.at("learner"), x, r.at("mean_mse"), r.at("stderr_mse")});
    }
  } else if (id == "pricing") {
    for (const auto& r : rows) {
      if (r.at("iteration") == "final") continue;
      points.push_back({r.at("series"), r.at("iteration"), r.at("mean"), r.at("stderr")});
    }
  } else if (id == "equivalence") {
    for (const auto& r : rows) {
      points.push_back({"weight_gap", r.at("dim"), r.at("mean_weight_gap"),
                        r.at("stderr_weight_gap")});
    }
  } else {
    fail(ErrorCode::kInvalidArgument, "experiment '" + id + "' has no plot panel");
  }
  require(!points.empty(), ErrorCode::kEmptySample,
          "no successful results to plot in " + results_dir.string());
  const fs::path file = results_dir / ("plot_" + id + ".csv");
  CsvWriter out(file, {"series", "x", "mean", "stderr"});
  for (const auto& p : points) out.row({p.series, p.x, p.mean, p.stderr_});
  return {file};
}

}  // namespace pstd::experiments
