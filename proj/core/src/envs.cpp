#include "pstd/envs.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pstd/error.hpp"

namespace pstd {

namespace {

void check_spec(const PomdpSpec& spec) {
  require(spec.transition.rows() == spec.transition.cols() &&
              spec.transition.rows() >= 1,
          ErrorCode::kShapeMismatch, "pomdp: transition must be square");
  require(spec.emission.cols() == spec.states() && spec.emission.rows() >= 1,
          ErrorCode::kShapeMismatch, "pomdp: emission columns must be states");
  require(spec.reward.size() == spec.states(), ErrorCode::kShapeMismatch,
          "pomdp: reward length must be the state count");
  require(spec.gamma >= 0.0 && spec.gamma < 1.0, ErrorCode::kInvalidArgument,
          "pomdp: discount must lie in [0, 1)");
}

// A_o = T diag(O(o, :)): maps the joint over the emitting state to the joint
// over the next emitting state after observing o.
MatrixXd observable_operator(const PomdpSpec& spec, int o) {
  return spec.transition * spec.emission.row(o).transpose().asDiagonal();
}

Index window_count(Index z, Index length) {
  Index n = 1;
  for (Index i = 0; i < length; ++i) n *= z;
  return n;
}

// Symbols of window `index`, oldest first.
std::vector<int> decode_window(Index index, Index z, Index length) {
  std::vector<int> out(static_cast<std::size_t>(length));
  for (Index i = length - 1; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = static_cast<int>(index % z);
    index /= z;
  }
  return out;
}

}  // namespace

PomdpSpec rr_pomdp_spec() {
  PomdpSpec spec;
  spec.transition.resize(4, 4);
  spec.transition << 0.7829, 0.1036, 0.0399, 0.0736,  //
      0.1036, 0.4237, 0.4262, 0.0465,                 //
      0.0399, 0.4262, 0.4380, 0.0959,                 //
      0.0736, 0.0465, 0.0959, 0.7840;
  spec.emission.resize(2, 4);
  spec.emission << 1, 0, 1, 0,  //
      0, 1, 0, 1;
  spec.reward.resize(4);
  spec.reward << 1, 0, 1, 0;
  spec.gamma = 0.9;
  return renormalized(std::move(spec));
}

PomdpSpec renormalized(PomdpSpec spec) {
  check_spec(spec);
  require((spec.transition.array() >= 0.0).all() &&
              (spec.emission.array() >= 0.0).all(),
          ErrorCode::kInvalidArgument, "pomdp: negative probability");
  double change = 0.0;
  auto normalize = [&change](MatrixXd& m) {
    for (Index c = 0; c < m.cols(); ++c) {
      const double sum = m.col(c).sum();
      require(sum > 0.0, ErrorCode::kInvalidArgument,
              "pomdp: column with zero mass");
      const VectorXd fixed = m.col(c) / sum;
      change = std::max(change, (fixed - m.col(c)).cwiseAbs().maxCoeff());
      m.col(c) = fixed;
    }
  };
  normalize(spec.transition);
  normalize(spec.emission);
  spec.max_renormalization = std::max(spec.max_renormalization, change);
  return spec;
}

VectorXd stationary_distribution(const MatrixXd& transition) {
  require(transition.rows() == transition.cols() && transition.rows() >= 1,
          ErrorCode::kShapeMismatch, "stationary: transition must be square");
  const Index m = transition.rows();
  // (T - I) pi = 0 with 1^T pi = 1, solved in the least-squares sense.
  MatrixXd a(m + 1, m);
  a.topRows(m) = transition - MatrixXd::Identity(m, m);
  a.row(m).setOnes();
  VectorXd rhs = VectorXd::Zero(m + 1);
  rhs(m) = 1.0;
  VectorXd pi = a.colPivHouseholderQr().solve(rhs);
  require(pi.allFinite(), ErrorCode::kFactorizationFailed,
          "stationary: solve failed");
  pi = pi.cwiseMax(0.0);
  return pi / pi.sum();
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Trajectory simulate_pomdp(const PomdpSpec& spec, Index steps,
                          std::uint64_t seed, std::vector<int>* latent) {
  check_spec(spec);
  require(steps >= 1, ErrorCode::kInvalidArgument,
          "simulate_pomdp: steps must be positive");
  const Index m = spec.states();
  auto column_dist = [](const MatrixXd& mat, Index c) {
    std::vector<double> w(mat.col(c).data(), mat.col(c).data() + mat.rows());
    return std::discrete_distribution<int>(w.begin(), w.end());
  };
  std::vector<std::discrete_distribution<int>> next, emit;
  for (Index s = 0; s < m; ++s) {
    next.push_back(column_dist(spec.transition, s));
    emit.push_back(column_dist(spec.emission, s));
  }
  const VectorXd pi = stationary_distribution(spec.transition);
  std::discrete_distribution<int> init(pi.data(), pi.data() + pi.size());

  std::mt19937_64 rng(seed);
  MatrixXd obs(1, steps);
  VectorXd rewards(steps);
  if (latent) latent->assign(static_cast<std::size_t>(steps), 0);
  int s = init(rng);
  for (Index t = 0; t < steps; ++t) {
    if (latent) (*latent)[static_cast<std::size_t>(t)] = s;
    obs(0, t) = emit[static_cast<std::size_t>(s)](rng);
    rewards(t) = spec.reward(s);
    s = next[static_cast<std::size_t>(s)](rng);
  }
  return Trajectory(std::move(obs), std::move(rewards));
}

VectorXd true_value(const PomdpSpec& spec) {
  check_spec(spec);
  const Index m = spec.states();
  const MatrixXd a =
      MatrixXd::Identity(m, m) - spec.gamma * spec.transition.transpose();
  return a.partialPivLu().solve(spec.reward);
}

BeliefFilter::BeliefFilter(const PomdpSpec& spec)
    : spec_(&spec), belief_(stationary_distribution(spec.transition)) {
  check_spec(spec);
}

void BeliefFilter::set_belief(const VectorXd& belief) {
  require(belief.size() == spec_->states(), ErrorCode::kShapeMismatch,
          "belief: dimension");
  require((belief.array() >= 0.0).all() &&
              std::abs(belief.sum() - 1.0) <= 1e-9,
          ErrorCode::kInvalidArgument, "belief: not a distribution");
  belief_ = belief;
}

double BeliefFilter::predict(int o) const {
  require(o >= 0 && o < spec_->observations(), ErrorCode::kInvalidArgument,
          "belief: unknown observation");
  return spec_->emission.row(o).dot(belief_);
}

void BeliefFilter::update(int o) {
  const double p = predict(o);
  require(p > 0.0, ErrorCode::kZeroProbability,
          "belief: observation has probability zero");
  const VectorXd post =
      spec_->emission.row(o).transpose().cwiseProduct(belief_) / p;
  belief_ = spec_->transition * post;
  belief_ /= belief_.sum();
}

double history_true_value(const PomdpSpec& spec, std::span<const int> window) {
  BeliefFilter f(spec);
  for (int o : window) f.update(o);
  return f.belief().dot(true_value(spec));
}

CovarianceSet analytic_window_covariances(const PomdpSpec& spec,
                                          WindowSpec windows) {
  check_spec(spec);
  require(windows.history >= 1 && windows.future >= 1,
          ErrorCode::kInvalidArgument, "window horizons must be positive");
  const Index z = spec.observations();
  const Index m = spec.states();
  const Index nh = window_count(z, windows.history);
  const Index nf = window_count(z, windows.future);
  require(nh <= 4096 && nf <= 4096, ErrorCode::kInvalidArgument,
          "analytic covariances: window space too large");

  std::vector<MatrixXd> ops;
  for (int o = 0; o < z; ++o) ops.push_back(observable_operator(spec, o));
  const VectorXd pi = stationary_distribution(spec.transition);

  // alpha.col(h): joint of history h and the state emitting the next symbol.
  MatrixXd alpha(m, nh);
  for (Index h = 0; h < nh; ++h) {
    VectorXd a = pi;
    for (int o : decode_window(h, z, windows.history)) {
      a = ops[static_cast<std::size_t>(o)] * a;
    }
    alpha.col(h) = a;
  }
  // r.row(f): Pr[future f | emitting state].
  MatrixXd r(nf, m);
  for (Index f = 0; f < nf; ++f) {
    RowVectorXd row = RowVectorXd::Ones(m);
    const auto sym = decode_window(f, z, windows.future);
    for (auto it = sym.rbegin(); it != sym.rend(); ++it) {
      row = row * ops[static_cast<std::size_t>(*it)];
    }
    r.row(f) = row;
  }

  CovarianceSet cs;
  cs.samples = 0;
  cs.h_mean = alpha.colwise().sum().transpose();
  cs.t_mean = r * pi;
  cs.hh = cs.h_mean.asDiagonal();
  cs.tt = cs.t_mean.asDiagonal();
  cs.th = r * alpha;
  cs.rh = spec.reward.transpose() * alpha;
  cs.hplus_h = MatrixXd::Zero(nh, nh);
  for (int o = 0; o < z; ++o) {
    const MatrixXd& op = ops[static_cast<std::size_t>(o)];
    MatrixXd hoh = MatrixXd::Zero(nh, nh);
    for (Index h = 0; h < nh; ++h) {
      const Index next = (h * z) % nh + o;  // drop oldest, append o
      hoh(next, h) = spec.emission.row(o).dot(alpha.col(h));
    }
    cs.hplus_h += hoh;
    cs.h_o_h[o] = std::move(hoh);
    cs.t_o_h[o] = r * op * alpha;
  }
  return cs;
}

std::vector<double> simulate_gbm(double sigma, double rho, Index steps,
                                 std::uint64_t seed, double p0) {
  require(sigma >= 0.0 && std::isfinite(sigma) && std::isfinite(rho),
          ErrorCode::kInvalidArgument, "gbm: sigma must be >= 0");
  require(p0 > 0.0, ErrorCode::kInvalidArgument, "gbm: p0 must be positive");
  require(steps >= 1, ErrorCode::kInvalidArgument,
          "gbm: steps must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> xi(0.0, 1.0);
  const double drift = rho - 0.5 * sigma * sigma;
  std::vector<double> p(static_cast<std::size_t>(steps));
  p[0] = p0;
  double log_p = std::log(p0);
  for (std::size_t t = 1; t < p.size(); ++t) {
    log_p += drift + sigma * xi(rng);
    p[t] = std::exp(log_p);
  }
  return p;
}

MarketState market_state(std::span<const double> prices, Index t) {
  require(t >= kMarketWindow && t < static_cast<Index>(prices.size()),
          ErrorCode::kInvalidArgument, "market_state: t out of range");
  const double base = prices[static_cast<std::size_t>(t - kMarketWindow)];
  MarketState s;
  s.x.resize(kMarketWindow);
  for (Index i = 1; i <= kMarketWindow; ++i) {
    s.x(i - 1) = prices[static_cast<std::size_t>(t - kMarketWindow + i)] / base;
  }
  s.price = prices[static_cast<std::size_t>(t)];
  return s;
}

double payoff(const MarketState& s) { return payoff(s.x); }

namespace {

// (1/100) sum_i x(i) w(j_i) with j_i = i/50 - 1, i = 1..100.
template <class W>
double legendre_moment(const Eigen::Ref<const VectorXd>& x, W w) {
  double acc = 0.0;
  for (Index i = 1; i <= kMarketWindow; ++i) {
    const double j = static_cast<double>(i) / 50.0 - 1.0;
    acc += x(i - 1) * w(j);
  }
  return acc / static_cast<double>(kMarketWindow);
}

void check_window(const Eigen::Ref<const VectorXd>& x) {
  require(x.size() == kMarketWindow, ErrorCode::kShapeMismatch,
          "basis: state must have 100 entries");
}

}  // namespace

VectorXd canonical_basis(const Eigen::Ref<const VectorXd>& x) {
  check_window(x);
  VectorXd phi(kCanonicalBasisSize);
  Index arg_min = 0, arg_max = 0;
  const double lo = x.minCoeff(&arg_min);  // first index on ties
  const double hi = x.maxCoeff(&arg_max);
  phi(0) = 1.0;
  phi(1) = payoff(x);
  phi(2) = lo - 1.0;
  phi(3) = hi - 1.0;
  phi(4) = static_cast<double>(arg_min);  // 1-based index minus 1
  phi(5) = static_cast<double>(arg_max);
  phi(6) = (x.array() - 1.0).sum() / std::sqrt(2.0) /
           static_cast<double>(kMarketWindow);
  phi(7) = legendre_moment(x, [](double j) { return std::sqrt(1.5) * j; });
  phi(8) = legendre_moment(x, [](double j) {
    return std::sqrt(2.5) * (3.0 * j * j - 1.0) / 2.0;
  });
  phi(9) = legendre_moment(x, [](double j) {
    return std::sqrt(3.5) * (5.0 * j * j * j - 3.0 * j) / 2.0;
  });
  phi(10) = phi(1) * phi(2);
  phi(11) = phi(1) * phi(3);
  phi(12) = phi(1) * phi(6);
  phi(13) = phi(1) * phi(7);
  phi(14) = phi(1) * phi(8);
  phi(15) = phi(1) * phi(9);
  return phi;
}

VectorXd extended_basis(const Eigen::Ref<const VectorXd>& x) {
  check_window(x);
  VectorXd phi(kExtendedBasisSize);
  phi.head(kCanonicalBasisSize) = canonical_basis(x);
  const double g = phi(1);
  phi(16) = legendre_moment(x, [](double j) {
    const double j2 = j * j;
    return std::sqrt(4.5) * (35.0 * j2 * j2 - 30.0 * j2 + 3.0) / 8.0;
  });
  phi(17) = legendre_moment(x, [](double j) {
    const double j2 = j * j;
    return std::sqrt(5.5) * (63.0 * j2 * j2 * j - 70.0 * j2 * j + 15.0 * j) /
           8.0;
  });
  phi(18) = g * phi(16);
  phi(19) = g * phi(17);
  phi.segment(20, kMarketWindow) = x;
  phi.segment(20 + kMarketWindow, kMarketWindow) = x.array().square().matrix();
  return phi;
}

}  // namespace pstd
