#include "pstd/experiments/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace pstd::experiments {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

bool valid_key(const std::string& key) {
  if (key.empty()) return false;
  for (char c : key) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return true;
}

template <class T>
std::optional<T> parse_number(const std::string& s) {
  T v{};
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(v)) return std::nullopt;
  }
  return v;
}

// Tracks which keys the schema consumed so leftovers can be rejected.
class Reader {
 public:
  explicit Reader(const RawConfig& raw) : raw_(raw) {}

  const std::string& text(const std::string& key) {
    used_.insert(key);
    if (!raw_.has(key)) {
      throw ConfigError(raw_.source() + ": missing required key '" + key + "'");
    }
    return raw_.at(key).value;
  }

  bool present(const std::string& key) {
    used_.insert(key);
    return raw_.has(key);
  }

  Index positive_int(const std::string& key) {
    const auto v = parse_number<long long>(text(key));
    if (!v) raw_.error(key, "expected an integer");
    if (*v <= 0) raw_.error(key, "must be positive");
    return static_cast<Index>(*v);
  }

  double positive_real(const std::string& key) {
    const auto v = parse_number<double>(text(key));
    if (!v) raw_.error(key, "expected a finite real number");
    if (*v <= 0.0) raw_.error(key, "must be positive");
    return *v;
  }

  double unit_interval(const std::string& key) {
    const double v = positive_real(key);
    if (v >= 1.0) raw_.error(key, "must lie in (0, 1)");
    return v;
  }

  std::vector<LearnerKind> learners(const std::string& key) {
    std::vector<LearnerKind> out;
    for (const auto& name : split(text(key), ',')) {
      try {
        const LearnerKind kind = learner_from_string(name);
        for (LearnerKind k : out) {
          if (k == kind) raw_.error(key, "duplicate learner '" + name + "'");
        }
        out.push_back(kind);
      } catch (const ConfigError&) {
        throw;
      } catch (const Error&) {
        raw_.error(key, "unknown learner '" + name + "'");
      }
    }
    return out;
  }

  std::vector<Index> int_list(const std::string& key) {
    std::vector<Index> out;
    for (const auto& item : split(text(key), ',')) {
      const auto v = parse_number<long long>(item);
      if (!v || *v <= 0) raw_.error(key, "expected positive integers");
      out.push_back(static_cast<Index>(*v));
    }
    return out;
  }

  void reject_unknown() const {
    for (const auto& [key, entry] : raw_.entries()) {
      if (!used_.count(key)) raw_.error(key, "unknown key '" + key + "'");
    }
  }

  const RawConfig& raw() const { return raw_; }

 private:
  const RawConfig& raw_;
  std::set<std::string> used_;
};

ExperimentId parse_id(Reader& r) {
  const std::string& v = r.text("experiment");
  static const std::map<std::string, ExperimentId> ids{
      {"rrpomdp_A", ExperimentId::kRrPomdpA},
      {"rrpomdp_B", ExperimentId::kRrPomdpB},
      {"rrpomdp_C", ExperimentId::kRrPomdpC},
      {"pricing", ExperimentId::kPricing},
      {"equivalence", ExperimentId::kEquivalence},
      {"oracles", ExperimentId::kOracles},
  };
  const auto it = ids.find(v);
  if (it == ids.end()) r.raw().error("experiment", "unknown experiment '" + v + "'");
  return it->second;
}

RrPomdpConfig read_rrpomdp(Reader& r, ExperimentId id) {
  RrPomdpConfig c;
  c.steps = r.positive_int("steps");
  c.history_length = r.positive_int("history_length");
  c.future_length = r.positive_int("future_length");
  c.rbf_centers = r.positive_int("rbf_centers");
  if (id == ExperimentId::kRrPomdpB) {
    c.noise_features = r.positive_int("noise_features");
  }
  const std::string& bw = r.text("rbf_bandwidth");
  if (bw != "median") c.bandwidth = r.positive_real("rbf_bandwidth");
  c.learners = r.learners("learners");
  c.dim = r.positive_int("dim");
  if (c.history_length > 20 || c.future_length > 20) {
    r.raw().error("history_length", "window lengths above 20 are not supported");
  }
  return c;
}

PricingConfig read_pricing(Reader& r) {
  PricingConfig c;
  c.train_states = r.positive_int("train_states");
  c.eval_paths = r.positive_int("eval_paths");
  c.sigma = r.positive_real("sigma");
  c.rho = r.positive_real("rho");
  c.learners = r.learners("learners");
  const std::string& basis = r.text("basis");
  if (basis == "canonical") {
    c.basis = BasisSet::kCanonical;
  } else if (basis == "extended") {
    c.basis = BasisSet::kExtended;
  } else {
    r.raw().error("basis", "expected 'canonical' or 'extended'");
  }
  c.dim = r.positive_int("dim");
  c.future_horizon = r.positive_int("future_horizon");
  c.value_scale_factor = r.positive_real("value_scale_factor");
  c.max_iterations = r.positive_int("max_iterations");
  c.change_tolerance = r.positive_real("change_tolerance");
  c.restart_gap = r.positive_int("restart_gap");
  c.horizon_cap = r.positive_int("horizon_cap");

  const auto parts = split(r.text("threshold_grid"), ':');
  std::vector<double> g;
  for (const auto& p : parts) {
    const auto v = parse_number<double>(p);
    if (!v || *v <= 0.0) break;
    g.push_back(*v);
  }
  if (parts.size() != 3 || g.size() != 3 || g[2] < g[0]) {
    r.raw().error("threshold_grid",
                  "expected start:step:stop with positive values, stop >= start");
  }
  c.threshold_grid = {g[0], g[1], g[2]};
  if (c.train_states < 2 * kMarketWindow + 1) {
    r.raw().error("train_states", "need at least 201 training states");
  }
  for (LearnerKind k : c.learners) {
    if (k != LearnerKind::kLstd && k != LearnerKind::kPstd) {
      r.raw().error("learners", "pricing supports only lstd and pstd");
    }
  }
  return c;
}

EquivalenceConfig read_random_system(Reader& r) {
  EquivalenceConfig c;
  c.samples = r.positive_int("samples");
  c.history_dim = r.positive_int("history_dim");
  c.future_dim = r.positive_int("future_dim");
  const Index symbols = r.positive_int("symbols");
  if (symbols > 1000) r.raw().error("symbols", "at most 1000 symbols");
  c.symbols = static_cast<int>(symbols);
  c.dims = r.int_list("dims");
  for (Index n : c.dims) {
    if (n > std::min(c.history_dim, c.future_dim)) {
      r.raw().error("dims", "dimension exceeds min(history_dim, future_dim)");
    }
  }
  c.gamma = r.unit_interval("gamma");
  return c;
}

}  // namespace

RawConfig RawConfig::parse(std::istream& in, std::string source) {
  RawConfig c;
  c.source_ = std::move(source);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    const std::string body = trim(line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = c.source_ + ":" + std::to_string(number) + ": ";
    if (eq == std::string::npos) {
      throw ConfigError(where + "expected 'key = value'");
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (!valid_key(key)) throw ConfigError(where + "invalid key '" + key + "'");
    if (value.empty()) throw ConfigError(where + "empty value for '" + key + "'");
    if (c.entries_.count(key)) {
      throw ConfigError(where + "duplicate key '" + key + "' (first on line " +
                        std::to_string(c.entries_.at(key).line) + ")");
    }
    c.entries_[key] = {value, number};
  }
  return c;
}

RawConfig RawConfig::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(file.string() + ": cannot open config");
  return parse(in, file.string());
}

const RawConfig::Entry& RawConfig::at(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw ConfigError(source_ + ": missing required key '" + key + "'");
  }
  return it->second;
}

std::string RawConfig::canonical() const {
  std::string out;
  for (const auto& [key, entry] : entries_) out += key + "=" + entry.value + "\n";
  return out;
}

void RawConfig::error(const std::string& key, const std::string& message) const {
  const auto it = entries_.find(key);
  const std::string line =
      it == entries_.end() ? std::string() : ":" + std::to_string(it->second.line);
  throw ConfigError(source_ + line + ": " + key + ": " + message);
}

const char* to_string(ExperimentId id) {
  switch (id) {
    case ExperimentId::kRrPomdpA: return "rrpomdp_A";
    case ExperimentId::kRrPomdpB: return "rrpomdp_B";
    case ExperimentId::kRrPomdpC: return "rrpomdp_C";
    case ExperimentId::kPricing: return "pricing";
    case ExperimentId::kEquivalence: return "equivalence";
    case ExperimentId::kOracles: return "oracles";
  }
  return "unknown";
}

std::vector<double> ThresholdGrid::levels() const {
  const auto n = static_cast<long long>(std::floor((stop - start) / step + 1e-9));
  std::vector<double> out;
  for (long long i = 0; i <= n; ++i) out.push_back(start + static_cast<double>(i) * step);
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::set<std::uint64_t> seeds;
  for (const auto& item : split(text, ',')) {
    const auto dash = item.find('-');
    const std::string lo_text = trim(item.substr(0, dash));
    const std::string hi_text =
        dash == std::string::npos ? lo_text : trim(item.substr(dash + 1));
    const auto lo = parse_number<std::uint64_t>(lo_text);
    const auto hi = parse_number<std::uint64_t>(hi_text);
    if (!lo || !hi || *hi < *lo) {
      throw ConfigError("bad seed item '" + item + "'");
    }
    if (*hi - *lo >= 1000000) throw ConfigError("seed range too large");
    for (std::uint64_t s = *lo; s <= *hi; ++s) seeds.insert(s);
  }
  if (seeds.empty()) throw ConfigError("empty seed list");
  return {seeds.begin(), seeds.end()};
}

ExperimentConfig validate(const RawConfig& raw) {
  Reader r(raw);
  ExperimentConfig c;
  c.id = parse_id(r);
  try {
    c.seeds = parse_seed_list(r.text("seeds"));
  } catch (const ConfigError& e) {
    raw.error("seeds", e.what());
  }
  if (r.present("output_dir")) c.output_dir = raw.at("output_dir").value;
  switch (c.id) {
    case ExperimentId::kRrPomdpA:
    case ExperimentId::kRrPomdpB:
    case ExperimentId::kRrPomdpC:
      c.rrpomdp = read_rrpomdp(r, c.id);
      break;
    case ExperimentId::kPricing:
      c.pricing = read_pricing(r);
      break;
    case ExperimentId::kEquivalence:
      c.equivalence = read_random_system(r);
      break;
    case ExperimentId::kOracles:
      c.oracles.random_system = read_random_system(r);
      c.oracles.filter_steps = r.positive_int("filter_steps");
      c.oracles.perturbations = r.positive_int("perturbations");
      c.oracles.chain_small_samples = r.positive_int("chain_small_samples");
      c.oracles.chain_large_samples = r.positive_int("chain_large_samples");
      break;
  }
  r.reject_unknown();
  c.canonical = raw.canonical();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  return validate(RawConfig::load(file));
}

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << value;
  return out.str();
}

}  // namespace pstd::experiments
