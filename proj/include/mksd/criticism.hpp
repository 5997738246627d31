#pragma once

// Finite-set Stein discrepancy (mFSSD) at J test locations, its delta-method
// variance, location optimization by Nelder–Mead, and the held-out
// criticism procedure.
//
// With τ(x) ∈ R^{dJ} stacking (A⁽¹⁾_q k(x, v_j))_i, the statistic is
// ‖mean τ‖²/(dJ) and the optimized objective is mfssd / (σ̃ + r) with
// σ̃² = (4/(dJ)²) μ̂ᵀΣ̂μ̂.

#include <Eigen/Dense>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <type_traits>
#include <vector>

#include "mksd/errors.hpp"
#include "mksd/gof.hpp"
#include "mksd/rng.hpp"
#include "mksd/stein.hpp"

namespace mksd {

template <Chart C>
struct TestLocations {
  std::vector<typename C::Point> V;

  std::size_t J() const { return V.size(); }
};

/// n × (d·J) matrix of features τ(x_i); column i + d·j holds (A⁽¹⁾k(x, v_j))_i.
template <UnnormalizedDensity Q>
Eigen::MatrixXd feature_matrix(const WitnessEvaluator<Q>& w, std::span<const typename Q::chart_type::Point> V) {
  using C = typename Q::chart_type;
  const auto& chart = w.kernel().chart();
  const auto n = static_cast<Eigen::Index>(w.size());
  Eigen::MatrixXd t(n, static_cast<Eigen::Index>(C::dim * V.size()));
  for (std::size_t j = 0; j < V.size(); ++j) {
    chart.check_interior(V[j]);
    const auto jv = chart.jet(V[j]);
    for (Eigen::Index i = 0; i < n; ++i) {
      t.row(i).segment(static_cast<Eigen::Index>(C::dim * j), C::dim) =
          w.feature(static_cast<std::size_t>(i), jv).transpose();
    }
  }
  return t;
}

/// ‖mean τ‖² / (dJ).
inline double mfssd_from_features(const Eigen::MatrixXd& t) {
  if (t.rows() < 1) throw TooFewSamples(0, 1);
  return t.colwise().mean().squaredNorm() / static_cast<double>(t.cols());
}

/// (4/(dJ)²) μ̂ᵀΣ̂μ̂ with Σ̂ the unbiased sample covariance of the features.
inline double mfssd_variance_from_features(const Eigen::MatrixXd& t) {
  const auto n = t.rows();
  if (n < 2) throw TooFewSamples(static_cast<std::size_t>(n), 2);
  const Eigen::RowVectorXd mu = t.colwise().mean();
  const Eigen::VectorXd proj = (t.rowwise() - mu) * mu.transpose();
  const double quad = proj.squaredNorm() / static_cast<double>(n - 1);
  const double dj = static_cast<double>(t.cols());
  return 4.0 * quad / (dj * dj);
}

inline constexpr double kObjectiveRegularizer = 1e-6;

inline double mfssd_objective_from_features(const Eigen::MatrixXd& t, double reg = kObjectiveRegularizer) {
  return mfssd_from_features(t) / (std::sqrt(mfssd_variance_from_features(t)) + reg);
}

template <UnnormalizedDensity Q>
double mfssd(std::span<const typename Q::chart_type::Point> data, const Q& q, const ExpKernel<typename Q::chart_type>& k,
             const TestLocations<typename Q::chart_type>& V) {
  if (data.empty()) throw TooFewSamples(0, 1);
  return mfssd_from_features(feature_matrix(WitnessEvaluator<Q>(q, k, data), std::span(V.V)));
}

template <UnnormalizedDensity Q>
double mfssd_variance(std::span<const typename Q::chart_type::Point> data, const Q& q,
                      const ExpKernel<typename Q::chart_type>& k, const TestLocations<typename Q::chart_type>& V) {
  if (data.size() < 2) throw TooFewSamples(data.size(), 2);
  return mfssd_variance_from_features(feature_matrix(WitnessEvaluator<Q>(q, k, data), std::span(V.V)));
}

template <UnnormalizedDensity Q>
double mfssd_objective(std::span<const typename Q::chart_type::Point> data, const Q& q,
                       const ExpKernel<typename Q::chart_type>& k, const TestLocations<typename Q::chart_type>& V,
                       double reg = kObjectiveRegularizer) {
  if (data.size() < 2) throw TooFewSamples(data.size(), 2);
  return mfssd_objective_from_features(feature_matrix(WitnessEvaluator<Q>(q, k, data), std::span(V.V)), reg);
}

// ---------------------------------------------------------------------------
// Nelder–Mead (GSL nmsimplex2) on a wrapped objective.

namespace detail {

struct GslMinimizerDeleter {
  void operator()(gsl_multimin_fminimizer* s) const { gsl_multimin_fminimizer_free(s); }
};
struct GslVectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;  // minimized value
  std::size_t iterations = 0;
};

template <class F>
NelderMeadResult nelder_mead(F&& f, const Eigen::VectorXd& x0, double step, double size_tol, std::size_t max_iter) {
  const auto n = static_cast<std::size_t>(x0.size());
  struct Ctx {
    std::remove_reference_t<F>* f;
    std::size_t n;
  } ctx{&f, n};
  gsl_multimin_function fn;
  fn.n = n;
  fn.params = &ctx;
  fn.f = [](const gsl_vector* v, void* p) -> double {
    auto* c = static_cast<Ctx*>(p);
    Eigen::VectorXd x(static_cast<Eigen::Index>(c->n));
    for (std::size_t i = 0; i < c->n; ++i) x(static_cast<Eigen::Index>(i)) = gsl_vector_get(v, i);
    const double val = (*c->f)(x);
    return std::isfinite(val) ? val : 1e300;
  };
  std::unique_ptr<gsl_vector, GslVectorDeleter> x(gsl_vector_alloc(n)), ss(gsl_vector_alloc(n));
  for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x.get(), i, x0(static_cast<Eigen::Index>(i)));
  gsl_vector_set_all(ss.get(), step);
  std::unique_ptr<gsl_multimin_fminimizer, GslMinimizerDeleter> s(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n));
  gsl_multimin_fminimizer_set(s.get(), &fn, x.get(), ss.get());
  NelderMeadResult out;
  for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
    if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s.get()), size_tol) == GSL_SUCCESS) break;
  }
  out.x.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) out.x(static_cast<Eigen::Index>(i)) = gsl_vector_get(s->x, i);
  out.value = s->fval;
  return out;
}

// RAII guard so a GSL error inside the optimizer is reported, not fatal.
struct GslErrorScope {
  gsl_error_handler_t* previous;
  GslErrorScope() : previous(gsl_set_error_handler_off()) {}
  ~GslErrorScope() { gsl_set_error_handler(previous); }
};

}  // namespace detail

struct LocationOptimizerConfig {
  int starts = 5;
  int candidates_per_start = 200;  // jittered configurations screened per start
  double jitter = 1.0;            // standard deviation of start jitter, radians
  double start_separation = 0.5;  // minimum wrapped distance between chosen starts
  double initial_step = 0.3;
  double size_tol = 1e-9;
  std::size_t max_iter = 20000;
  int polish_restarts = 2;        // restarts from the best optimum with a smaller simplex
  double regularizer = kObjectiveRegularizer;
};

/// Wrapped per-coordinate distance (max norm) between two chart points.
template <Chart C>
double wrapped_distance(const typename C::Point& a, const typename C::Point& b) {
  double d = 0.0;
  for (int i = 0; i < C::dim; ++i) {
    double di = std::abs(wrap_angle(a(i) - b(i)));
    di = std::min(di, kTwoPi - di);
    d = std::max(d, di);
  }
  return d;
}

/// Jitter locations closer than `min_sep` to an earlier one.
template <Chart C>
void separate_duplicates(const C& chart, std::vector<typename C::Point>& V, RngStream& rng, double min_sep = 1e-3,
                         double jitter = 1e-2) {
  for (std::size_t j = 1; j < V.size(); ++j) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      bool clash = false;
      for (std::size_t i = 0; i < j; ++i) clash = clash || wrapped_distance<C>(V[i], V[j]) < min_sep;
      if (!clash) break;
      typename C::Point p = V[j];
      for (int c = 0; c < C::dim; ++c) p(c) += jitter * rng.normal();
      V[j] = chart.wrap(p);
    }
  }
}

/// Maximize the mFSSD objective over J locations by multi-start Nelder–Mead.
/// Candidate starts are jittered draws from the data (each start owns a
/// derived stream); the result is the best over starts, earliest on ties.
template <UnnormalizedDensity Q>
TestLocations<typename Q::chart_type> optimize_locations(std::span<const typename Q::chart_type::Point> train,
                                                          const Q& q, const ExpKernel<typename Q::chart_type>& k,
                                                          std::size_t J, RngStream& rng,
                                                          const LocationOptimizerConfig& cfg = {}) {
  using C = typename Q::chart_type;
  using Point = typename C::Point;
  if (J < 1) throw UsageError("number of test locations J must be at least 1");
  if (train.size() < 2) throw TooFewSamples(train.size(), 2);
  if (cfg.starts < 1) throw UsageError("optimizer needs at least one start");
  const C& chart = k.chart();
  const WitnessEvaluator<Q> w(q, k, train);
  const auto dim = static_cast<Eigen::Index>(C::dim * J);

  auto unpack = [&](const Eigen::VectorXd& z) {
    std::vector<Point> V(J);
    for (std::size_t j = 0; j < J; ++j) {
      V[j] = chart.wrap(z.segment(static_cast<Eigen::Index>(C::dim * j), C::dim));
    }
    return V;
  };
  auto objective = [&](const Eigen::VectorXd& z) {
    try {
      const auto V = unpack(z);
      return mfssd_objective_from_features(feature_matrix(w, std::span<const Point>(V)), cfg.regularizer);
    } catch (const SingularChartPoint&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  // Screen jittered data configurations, then start from the best ones that
  // are mutually separated so that the starts explore different basins.
  const RngStream root(rng.engine()());
  struct Candidate {
    Eigen::VectorXd z;
    double value;
  };
  std::vector<Candidate> pool;
  for (int s = 0; s < cfg.starts; ++s) {
    RngStream srng = root.derive(static_cast<std::uint64_t>(s));
    std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);
    for (int c = 0; c < std::max(1, cfg.candidates_per_start); ++c) {
      Eigen::VectorXd z(dim);
      for (std::size_t j = 0; j < J; ++j) {
        const Point& x = train[pick(srng.engine())];
        for (int i = 0; i < C::dim; ++i) z(static_cast<Eigen::Index>(C::dim * j + i)) = x(i) + cfg.jitter * srng.normal();
      }
      pool.push_back({z, objective(z)});
    }
  }
  std::stable_sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) { return a.value > b.value; });
  auto separation = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double d = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      const auto o = static_cast<Eigen::Index>(C::dim * j);
      d = std::max(d, wrapped_distance<C>(a.segment(o, C::dim), b.segment(o, C::dim)));
    }
    return d;
  };
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < pool.size() && chosen.size() < static_cast<std::size_t>(cfg.starts); ++i) {
    bool far = true;
    for (auto c : chosen) far = far && separation(pool[i].z, pool[c].z) >= cfg.start_separation;
    if (far) chosen.push_back(i);
  }
  for (std::size_t i = 0; i < pool.size() && chosen.size() < static_cast<std::size_t>(cfg.starts); ++i) {
    if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) chosen.push_back(i);
  }

  detail::GslErrorScope guard;
  Eigen::VectorXd best_z;
  double best = -std::numeric_limits<double>::infinity();
  auto neg = [&](const Eigen::VectorXd& z) { return -objective(z); };
  for (auto c : chosen) {
    const auto res = detail::nelder_mead(neg, pool[c].z, cfg.initial_step, cfg.size_tol, cfg.max_iter);
    if (best_z.size() == 0 || -res.value > best) {
      best = -res.value;
      best_z = res.x;
    }
  }
  for (int r = 0; r < cfg.polish_restarts; ++r) {
    const auto again = detail::nelder_mead(neg, best_z, cfg.initial_step * 0.1, cfg.size_tol, cfg.max_iter);
    if (-again.value >= best) {
      best = -again.value;
      best_z = again.x;
    }
  }
  TestLocations<C> out{unpack(best_z)};
  RngStream dup = root.derive(0x647570ULL);
  separate_duplicates(chart, out.V, dup);
  return out;
}

// ---------------------------------------------------------------------------
// Held-out criticism

struct CriticismConfig {
  std::size_t J = 10;
  std::size_t bootstrap = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  LocationOptimizerConfig optimizer{};
};

template <Chart C>
struct CriticismResult {
  TestLocations<C> locations;               // sorted by single-location objective, descending
  std::vector<double> location_objective;   // single-location objective on the train half
  double objective = 0.0;                   // joint objective on the train half
  double statistic = 0.0;                   // mFSSD on the test half
  std::vector<double> null_samples;
  double quantile = 0.0;
  double p_value = 1.0;
  bool reject = false;
  std::vector<double> kernel_params;
  std::vector<std::size_t> train, test;
};

/// Wild bootstrap of the mFSSD V-statistic with h(x, y) = τ(x)ᵀτ(y)/(dJ):
/// S_t = ‖Tᵀw_t‖² / (n² dJ), linear in n per replicate.
inline std::vector<double> mfssd_wild_bootstrap(const Eigen::MatrixXd& t, std::size_t B, std::uint64_t seed) {
  const auto n = t.rows();
  const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(n) * static_cast<double>(t.cols()));
  const RngStream root(seed);
  std::vector<double> out(B);
  Eigen::VectorXd w(n);
  for (std::size_t b = 0; b < B; ++b) {
    RngStream s = root.derive(b);
    for (Eigen::Index i = 0; i < n; ++i) w(i) = s.rademacher();
    out[b] = scale * (t.transpose() * w).squaredNorm();
  }
  return out;
}

/// Optimize locations on a seeded train half, test on the held-out half.
template <UnnormalizedDensity Q>
CriticismResult<typename Q::chart_type> criticize(std::span<const typename Q::chart_type::Point> data, const Q& q,
                                                  const ExpKernel<typename Q::chart_type>& k,
                                                  const CriticismConfig& cfg) {
  using C = typename Q::chart_type;
  using Point = typename C::Point;
  if (data.size() < 4) throw TooFewSamples(data.size(), 4);
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
  if (cfg.bootstrap < 1) throw UsageError("bootstrap size must be at least 1");
  CriticismResult<C> r;
  r.kernel_params = k.params();
  std::tie(r.train, r.test) = split_half(data.size(), cfg.seed);
  const auto train = gather(data, r.train);
  const auto test = gather(data, r.test);

  RngStream opt_rng = RngStream(cfg.seed).derive(0x6f7074ULL);
  r.locations = optimize_locations<Q>(train, q, k, cfg.J, opt_rng, cfg.optimizer);

  const WitnessEvaluator<Q> wtrain(q, k, std::span<const Point>(train));
  for (const auto& v : r.locations.V) {
    const std::vector<Point> one{v};
    r.location_objective.push_back(
        mfssd_objective_from_features(feature_matrix(wtrain, std::span<const Point>(one)), cfg.optimizer.regularizer));
  }
  std::vector<std::size_t> order(r.locations.J());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return r.location_objective[a] > r.location_objective[b]; });
  TestLocations<C> sorted;
  std::vector<double> sorted_obj;
  for (auto i : order) {
    sorted.V.push_back(r.locations.V[i]);
    sorted_obj.push_back(r.location_objective[i]);
  }
  r.locations = std::move(sorted);
  r.location_objective = std::move(sorted_obj);
  r.objective = mfssd_objective_from_features(feature_matrix(wtrain, std::span<const Point>(r.locations.V)),
                                              cfg.optimizer.regularizer);

  const Eigen::MatrixXd t = feature_matrix(WitnessEvaluator<Q>(q, k, std::span<const Point>(test)),
                                           std::span<const Point>(r.locations.V));
  r.statistic = mfssd_from_features(t);
  r.null_samples = mfssd_wild_bootstrap(t, cfg.bootstrap, RngStream(cfg.seed).derive(0x6e756c6cULL).seed());
  r.quantile = empirical_quantile(r.null_samples, 1.0 - cfg.alpha);
  r.p_value = bootstrap_p_value(r.statistic, r.null_samples);
  r.reject = r.statistic > r.quantile;
  return r;
}

/// Single-location objective on an m × m lattice of the torus (x = 2πa/m, y = 2πb/m).
template <UnnormalizedDensity Q>
  requires(Q::chart_type::kind == ManifoldKind::Torus2)
std::vector<std::array<double, 3>> objective_lattice(std::span<const Torus::Point> train, const Q& q,
                                                     const ExpKernel<Torus>& k, int m = 32,
                                                     double reg = kObjectiveRegularizer) {
  if (m < 1) throw EmptyGrid();
  const WitnessEvaluator<Q> w(q, k, train);
  std::vector<std::array<double, 3>> out;
  out.reserve(static_cast<std::size_t>(m * m));
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      const std::vector<Torus::Point> V{Torus::point(kTwoPi * a / m, kTwoPi * b / m)};
      out.push_back({V[0](0), V[0](1), mfssd_objective_from_features(feature_matrix(w, std::span<const Torus::Point>(V)), reg)});
    }
  }
  return out;
}

}  // namespace mksd
