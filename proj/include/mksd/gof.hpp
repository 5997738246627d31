#pragma once

// Goodness-of-fit tests built on Stein Gram matrices: U/V statistics, the
// wild-bootstrap and spectrum null approximations, p-values, and kernel
// parameter selection by the power proxy û/σ̂ on a training split.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mksd/errors.hpp"
#include "mksd/kernel.hpp"
#include "mksd/rng.hpp"
#include "mksd/stein.hpp"

namespace mksd {

enum class NullMethod { WildBootstrap, Spectrum };

inline std::string_view to_string(NullMethod m) {
  return m == NullMethod::WildBootstrap ? "wild" : "spectrum";
}

struct TestConfig {
  int order = 1;
  double alpha = 0.01;
  std::size_t bootstrap = 1000;
  NullMethod method = NullMethod::WildBootstrap;
  std::uint64_t seed = 0;

  void validate() const {
    if (order < 0 || order > 2) throw UsageError("order must be 0, 1 or 2");
    if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
    if (bootstrap < 1) throw UsageError("bootstrap size must be at least 1");
  }
};

struct TestResult {
  double statistic = 0.0;  // value compared against the null samples
  std::vector<double> null_samples;
  double quantile = 0.0;   // γ_{1−α} of the null samples
  double p_value = 1.0;
  bool reject = false;
  std::vector<double> kernel_params;
  double u_statistic = 0.0;
  double v_statistic = 0.0;
  std::size_t n = 0;
  int order = 1;
  NullMethod method = NullMethod::WildBootstrap;
  double alpha = 0.01;
};

// ---------------------------------------------------------------------------
// Statistics

inline double u_statistic(const SteinGram& g) {
  const auto n = g.size();
  if (n < 2) throw TooFewSamples(static_cast<std::size_t>(n), 2);
  const double off = g.matrix.sum() - g.matrix.trace();
  return off / (static_cast<double>(n) * static_cast<double>(n - 1));
}

inline double v_statistic(const SteinGram& g) {
  const auto n = g.size();
  if (n < 1) throw TooFewSamples(0, 1);
  return g.matrix.sum() / (static_cast<double>(n) * static_cast<double>(n));
}

/// Plug-in σ̂: standard deviation over i of the off-diagonal row means.
inline double sigma_hat(const SteinGram& g) {
  const auto n = g.size();
  if (n < 2) throw TooFewSamples(static_cast<std::size_t>(n), 2);
  const Eigen::VectorXd rows =
      (g.matrix.rowwise().sum() - g.matrix.diagonal()) / static_cast<double>(n - 1);
  const double mean = rows.mean();
  return std::sqrt((rows.array() - mean).square().mean());
}

// ---------------------------------------------------------------------------
// Null approximations

/// Rademacher sign matrix (n × B); column t uses the stream derived from (seed, t).
inline Eigen::MatrixXd rademacher_matrix(Eigen::Index n, std::size_t B, std::uint64_t seed) {
  Eigen::MatrixXd w(n, static_cast<Eigen::Index>(B));
  const RngStream root(seed);
  for (std::size_t t = 0; t < B; ++t) {
    RngStream s = root.derive(t);
    for (Eigen::Index i = 0; i < n; ++i) w(i, static_cast<Eigen::Index>(t)) = s.rademacher();
  }
  return w;
}

/// S_t = (1/n²) Σ_ij W_it W_jt G_ij.
inline std::vector<double> wild_bootstrap(const SteinGram& g, std::size_t B, std::uint64_t seed) {
  const auto n = g.size();
  if (n < 1) throw TooFewSamples(0, 1);
  const Eigen::MatrixXd w = rademacher_matrix(n, B, seed);
  const Eigen::MatrixXd gw = g.matrix * w;
  const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  std::vector<double> out(B);
  for (std::size_t t = 0; t < B; ++t) {
    const auto c = static_cast<Eigen::Index>(t);
    out[t] = scale * w.col(c).dot(gw.col(c));
  }
  return out;
}

/// Eigenvalues of a symmetric matrix; EigendecompositionFailure on failure.
inline Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& m) {
  if (!m.allFinite()) throw EigendecompositionFailure("matrix has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw EigendecompositionFailure("symmetric eigensolver did not converge");
  return es.eigenvalues();
}

/// Σ_j λ_j (Z²_jt − 1) · scale, Z i.i.d. standard normal per replicate stream.
inline std::vector<double> weighted_chi2_null(const Eigen::VectorXd& lambda, double scale, std::size_t B,
                                              std::uint64_t seed) {
  std::vector<double> out(B);
  const RngStream root(seed);
  for (std::size_t t = 0; t < B; ++t) {
    RngStream s = root.derive(t);
    double acc = 0.0;
    for (Eigen::Index j = 0; j < lambda.size(); ++j) {
      const double z = s.normal();
      acc += lambda(j) * (z * z - 1.0);
    }
    out[t] = scale * acc;
  }
  return out;
}

/// S_t = (1/n) Σ_j w̃_j (Z²_jt − 1) with w̃ the eigenvalues of G (all kept).
inline std::vector<double> spectrum_null(const SteinGram& g, std::size_t B, std::uint64_t seed) {
  const auto n = g.size();
  if (n < 1) throw TooFewSamples(0, 1);
  return weighted_chi2_null(symmetric_eigenvalues(g.matrix), 1.0 / static_cast<double>(n), B, seed);
}

/// Type-1 empirical quantile.
inline double empirical_quantile(std::vector<double> samples, double level) {
  if (samples.empty()) throw TooFewSamples(0, 1);
  std::sort(samples.begin(), samples.end());
  const auto B = static_cast<double>(samples.size());
  auto idx = static_cast<std::ptrdiff_t>(std::ceil(level * B)) - 1;
  idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(samples.size()) - 1);
  return samples[static_cast<std::size_t>(idx)];
}

/// (1 + #{S_t ≥ statistic}) / (B + 1).
inline double bootstrap_p_value(double statistic, std::span<const double> null) {
  const auto count = std::count_if(null.begin(), null.end(), [&](double s) { return s >= statistic; });
  return (1.0 + static_cast<double>(count)) / (static_cast<double>(null.size()) + 1.0);
}

inline void finalize(TestResult& r) {
  r.quantile = empirical_quantile(r.null_samples, 1.0 - r.alpha);
  r.p_value = bootstrap_p_value(r.statistic, r.null_samples);
  r.reject = r.statistic > r.quantile;
}

// ---------------------------------------------------------------------------
// Zeroth order: pooled two-sample null for the data-vs-reference MMD.

/// Pooled data + reference Gram, centred, with signed weights +1/n, −1/m.
struct PooledGram {
  Eigen::MatrixXd centered;
  Eigen::VectorXd weights;
  std::size_t n = 0, m = 0;
  double mmd2_biased = 0.0;
  double mmd2_unbiased = 0.0;
};

template <Chart C>
PooledGram pooled_gram(const ExpKernel<C>& k, std::span<const typename C::Point> data,
                       std::span<const typename C::Point> reference) {
  if (reference.empty()) throw EmptyReferenceSample();
  if (data.size() < 2 || reference.size() < 2) throw TooFewSamples(std::min(data.size(), reference.size()), 2);
  std::vector<typename C::Point> pooled(data.begin(), data.end());
  pooled.insert(pooled.end(), reference.begin(), reference.end());
  const Eigen::MatrixXd kz = k.gram(pooled);
  PooledGram out;
  out.n = data.size();
  out.m = reference.size();
  const auto n = static_cast<Eigen::Index>(out.n), m = static_cast<Eigen::Index>(out.m);
  const auto N = n + m;
  out.weights.resize(N);
  out.weights.head(n).setConstant(1.0 / static_cast<double>(n));
  out.weights.tail(m).setConstant(-1.0 / static_cast<double>(m));
  out.mmd2_biased = out.weights.dot(kz * out.weights);
  const auto kxx = kz.topLeftCorner(n, n), kyy = kz.bottomRightCorner(m, m), kxy = kz.topRightCorner(n, m);
  const double dn = static_cast<double>(n), dm = static_cast<double>(m);
  out.mmd2_unbiased = (kxx.sum() - kxx.trace()) / (dn * (dn - 1)) + (kyy.sum() - kyy.trace()) / (dm * (dm - 1)) -
                      2.0 * kxy.sum() / (dn * dm);
  const Eigen::VectorXd row_mean = kz.rowwise().mean();
  const double grand = row_mean.mean();
  out.centered = kz;
  out.centered.colwise() -= row_mean;
  out.centered.rowwise() -= row_mean.transpose();
  out.centered.array() += grand;
  return out;
}

inline std::vector<double> pooled_wild_bootstrap(const PooledGram& p, std::size_t B, std::uint64_t seed) {
  const auto N = p.weights.size();
  Eigen::MatrixXd w = rademacher_matrix(N, B, seed);
  w.array().colwise() *= p.weights.array();
  const Eigen::MatrixXd kw = p.centered * w;
  std::vector<double> out(B);
  for (std::size_t t = 0; t < B; ++t) {
    const auto c = static_cast<Eigen::Index>(t);
    out[t] = w.col(c).dot(kw.col(c));
  }
  return out;
}

/// Null of n·MMD²_u: n (1/n + 1/m) (1/N) Σ ν_j (Z² − 1), ν eigenvalues of the centred pooled Gram.
inline std::vector<double> pooled_spectrum_null(const PooledGram& p, std::size_t B, std::uint64_t seed) {
  const double n = static_cast<double>(p.n), m = static_cast<double>(p.m);
  const double scale = n * (1.0 / n + 1.0 / m) / (n + m);
  return weighted_chi2_null(symmetric_eigenvalues(p.centered), scale, B, seed);
}

// ---------------------------------------------------------------------------
// Test driver

/// Run the order-c test. For c = 0, `reference` holds samples drawn from q.
template <UnnormalizedDensity Q>
TestResult run_test(std::span<const typename Q::chart_type::Point> data, const Q& q,
                    const ExpKernel<typename Q::chart_type>& k, const TestConfig& cfg,
                    std::span<const typename Q::chart_type::Point> reference = {}) {
  using C = typename Q::chart_type;
  cfg.validate();
  if (data.size() < 2) throw TooFewSamples(data.size(), 2);
  TestResult r;
  r.n = data.size();
  r.order = cfg.order;
  r.method = cfg.method;
  r.alpha = cfg.alpha;
  r.kernel_params = k.params();
  const std::uint64_t null_seed = RngStream(cfg.seed).derive(0x6e756c6cULL).seed();
  if (cfg.order == 0) {
    const PooledGram p = pooled_gram<C>(k, data, reference);
    r.v_statistic = p.mmd2_biased;
    r.u_statistic = p.mmd2_unbiased;
    if (cfg.method == NullMethod::WildBootstrap) {
      r.statistic = r.v_statistic;
      r.null_samples = pooled_wild_bootstrap(p, cfg.bootstrap, null_seed);
    } else {
      r.statistic = static_cast<double>(r.n) * r.u_statistic;
      r.null_samples = pooled_spectrum_null(p, cfg.bootstrap, null_seed);
    }
  } else {
    const SteinKernel<Q> sk(cfg.order, q, k);
    const SteinGram g = sk.gram(data);
    r.v_statistic = v_statistic(g);
    r.u_statistic = u_statistic(g);
    if (cfg.method == NullMethod::WildBootstrap) {
      r.statistic = r.v_statistic;
      r.null_samples = wild_bootstrap(g, cfg.bootstrap, null_seed);
    } else {
      r.statistic = static_cast<double>(r.n) * r.u_statistic;
      r.null_samples = spectrum_null(g, cfg.bootstrap, null_seed);
    }
  }
  finalize(r);
  return r;
}

// ---------------------------------------------------------------------------
// Kernel parameter selection

/// 9 log-spaced values per parameter over [p/8, 8p]; product grid for two parameters.
inline std::vector<std::vector<double>> default_param_grid(const std::vector<double>& center, int per_axis = 9) {
  std::vector<double> factors;
  for (int i = 0; i < per_axis; ++i) {
    const double t = per_axis == 1 ? 0.0 : -1.0 + 2.0 * i / (per_axis - 1);
    factors.push_back(std::pow(8.0, t));
  }
  std::vector<std::vector<double>> grid{{}};
  for (double c : center) {
    std::vector<std::vector<double>> next;
    for (const auto& g : grid) {
      for (double f : factors) {
        auto v = g;
        v.push_back(c * f);
        next.push_back(std::move(v));
      }
    }
    grid = std::move(next);
  }
  return grid;
}

/// Seeded 50/50 split of indices 0..n-1 into (train, test).
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_half(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  RngStream rng = RngStream(seed).derive(0x73706c6974ULL);
  std::shuffle(idx.begin(), idx.end(), rng.engine());
  const std::size_t half = n / 2;
  std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(half));
  std::vector<std::size_t> test(idx.begin() + static_cast<std::ptrdiff_t>(half), idx.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {train, test};
}

template <class P>
std::vector<P> gather(std::span<const P> pts, const std::vector<std::size_t>& idx) {
  std::vector<P> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(pts[i]);
  return out;
}

struct KernelSelection {
  std::vector<double> params;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::vector<double> objective;  // û/σ̂ per grid entry
};

inline constexpr double kSigmaFloor = 1e-12;

/// Power proxy û/max(σ̂, 1e-12) on the Stein Gram of `pts`.
template <UnnormalizedDensity Q>
double power_proxy(std::span<const typename Q::chart_type::Point> pts, const Q& q,
                   const ExpKernel<typename Q::chart_type>& k, int order,
                   std::span<const typename Q::chart_type::Point> reference = {}) {
  std::vector<typename Q::chart_type::Point> ref(reference.begin(), reference.end());
  const SteinKernel<Q> sk(order, q, k, std::move(ref));
  const SteinGram g = sk.gram(pts);
  return u_statistic(g) / std::max(sigma_hat(g), kSigmaFloor);
}

/// Evaluate the power proxy over `grid` on the training half of `data` and
/// return the argmax (lowest index on ties) together with the split.
template <UnnormalizedDensity Q>
KernelSelection select_kernel_params(std::span<const typename Q::chart_type::Point> data, const Q& q,
                                     const TestConfig& cfg, const std::vector<std::vector<double>>& grid,
                                     std::span<const typename Q::chart_type::Point> reference = {}) {
  using C = typename Q::chart_type;
  if (grid.empty()) throw EmptyGrid();
  if (data.size() < 4) throw TooFewSamples(data.size(), 4);
  KernelSelection sel;
  std::tie(sel.train, sel.test) = split_half(data.size(), cfg.seed);
  const auto train = gather(data, sel.train);
  double best = -std::numeric_limits<double>::infinity();
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const ExpKernel<C> k(q.chart(), grid[i]);
    const double obj = power_proxy<Q>(train, q, k, cfg.order, reference);
    sel.objective.push_back(obj);
    if (obj > best) {
      best = obj;
      best_i = i;
    }
  }
  sel.params = grid[best_i];
  return sel;
}

}  // namespace mksd
