#pragma once

// Stein kernels h_q^{(c)} of order 0, 1 and 2 and the empirical Stein witness.
//
//   h¹(x,y) = Σ_i [s_i(x)s_i(y)k + s_i(x)∂_{y_i}k + s_i(y)∂_{x_i}k + ∂_{x_i}∂_{y_i}k]
//   h²(x,y) = L_x L_y k,  L = Σ_ij g^{ij}(∂_i∂_j + s_i ∂_j)
//   h⁰(x,y) = k(x,y) − ξ̂(x) − ξ̂(y) + Ĉ   (ξ̂, Ĉ from reference samples of q)
//
// with s = ∂ log(q̃J) the Stein score.

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "mksd/errors.hpp"
#include "mksd/kernel.hpp"
#include "mksd/model.hpp"

namespace mksd {

/// n×n matrix of Stein kernel values over a point list.
struct SteinGram {
  Eigen::MatrixXd matrix;

  Eigen::Index size() const { return matrix.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return matrix(i, j); }
};

namespace detail {

template <Chart C>
struct SteinPoint {
  typename C::Point x;
  typename C::Vector s;       // Stein score ∂ log(q̃J)
  typename C::Matrix ginv;    // inverse metric
  typename C::Vector b;       // ginv * s (first-order part of L)
  typename C::Jet jet;
  double xi = 0.0;            // ξ̂(x) for the zeroth-order kernel
};

template <Chart C>
bool lex_greater(const typename C::Point& x, const typename C::Point& y) {
  for (int i = 0; i < C::dim; ++i) {
    if (x(i) != y(i)) return x(i) > y(i);
  }
  return false;
}

}  // namespace detail

/// Stein kernel of order 0, 1 or 2 for density q and kernel k.
template <UnnormalizedDensity Q>
class SteinKernel {
 public:
  using C = typename Q::chart_type;
  using Point = typename C::Point;
  using Kernel = ExpKernel<C>;

  SteinKernel(int order, Q q, Kernel k, std::vector<Point> reference = {})
      : order_(order), q_(std::move(q)), k_(std::move(k)), reference_(std::move(reference)) {
    if (order < 0 || order > 2) throw UsageError("Stein kernel order must be 0, 1 or 2");
    if (order == 0) {
      if (reference_.empty()) throw EmptyReferenceSample();
      ref_phi_.reserve(reference_.size());
      for (const auto& r : reference_) ref_phi_.push_back(k_.chart().jet(r).slot[0]);
      // Ĉ: mean over all ordered pairs of the reference sample
      double c = 0.0;
      for (std::size_t i = 0; i < ref_phi_.size(); ++i)
        for (std::size_t j = 0; j < ref_phi_.size(); ++j) c += std::exp(k_.exponent(ref_phi_[i], ref_phi_[j]));
      c_hat_ = c / static_cast<double>(ref_phi_.size() * ref_phi_.size());
    }
  }

  int order() const { return order_; }
  const Q& density() const { return q_; }
  const Kernel& kernel() const { return k_; }
  const std::vector<Point>& reference() const { return reference_; }
  double reference_mean() const { return c_hat_; }

  double operator()(const Point& x, const Point& y) const {
    if (detail::lex_greater<C>(x, y)) return pair(prepare(y), prepare(x));
    return pair(prepare(x), prepare(y));
  }

  SteinGram gram(std::span<const Point> pts) const {
    std::vector<detail::SteinPoint<C>> cache;
    cache.reserve(pts.size());
    for (const auto& p : pts) cache.push_back(prepare(p));
    const auto n = static_cast<Eigen::Index>(pts.size());
    SteinGram g{Eigen::MatrixXd(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) {
        g.matrix(i, j) = g.matrix(j, i) = pair(cache[i], cache[j]);
      }
    }
    return g;
  }

  /// Per-point quantities reused across all pairs involving the point.
  detail::SteinPoint<C> prepare(const Point& x) const {
    const C& chart = k_.chart();
    chart.check_interior(x);
    detail::SteinPoint<C> p;
    p.x = x;
    p.jet = chart.jet(x);
    if (order_ == 0) {
      double xi = 0.0;
      for (const auto& r : ref_phi_) xi += std::exp(k_.exponent(p.jet.slot[0], r));
      p.xi = xi / static_cast<double>(ref_phi_.size());
      return p;
    }
    p.s = stein_score(q_, x);
    if (order_ == 2) {
      p.ginv = chart.inverse_metric(x);
      p.b = p.ginv * p.s;
    }
    return p;
  }

  double pair(const detail::SteinPoint<C>& px, const detail::SteinPoint<C>& py) const {
    switch (order_) {
      case 0: return std::exp(k_.exponent(px.jet.slot[0], py.jet.slot[0])) - px.xi - py.xi + c_hat_;
      case 1: return first_order(px, py);
      default: return second_order(px, py);
    }
  }

 private:
  using Jet = typename C::Jet;

  double first_order(const detail::SteinPoint<C>& px, const detail::SteinPoint<C>& py) const {
    const auto t = k_.table(px.jet, py.jet, false);
    const double k = t.k;
    double h = 0.0;
    for (int i = 0; i < C::dim; ++i) {
      const int f = Jet::first(i);
      const double dx = k * t.a[f][0];
      const double dy = k * t.a[0][f];
      const double dxdy = k * (t.a[f][0] * t.a[0][f] + t.a[f][f]);
      h += px.s(i) * py.s(i) * k + (px.s(i) * dy + py.s(i) * dx) + dxdy;
    }
    return h;
  }

  // Coefficients of L = Σ_ij g^{ij}∂_i∂_j + Σ_j b_j ∂_j as (multi-index, weight) pairs.
  struct Term {
    int idx[2];
    int n;
    double w;
  };

  static int operator_terms(const detail::SteinPoint<C>& p, Term* out) {
    int m = 0;
    for (int j = 0; j < C::dim; ++j) {
      if (p.b(j) != 0.0) out[m++] = Term{{j, 0}, 1, p.b(j)};
    }
    for (int i = 0; i < C::dim; ++i) {
      for (int j = i; j < C::dim; ++j) {
        const double w = i == j ? p.ginv(i, i) : p.ginv(i, j) + p.ginv(j, i);
        if (w != 0.0) out[m++] = Term{{i, j}, 2, w};
      }
    }
    return m;
  }

  double second_order(const detail::SteinPoint<C>& px, const detail::SteinPoint<C>& py) const {
    constexpr int kMax = C::dim + C::dim * (C::dim + 1) / 2;
    Term tx[kMax], ty[kMax];
    const int nx = operator_terms(px, tx);
    const int ny = operator_terms(py, ty);
    const auto t = k_.table(px.jet, py.jet, true);
    double h = 0.0;
    for (int a = 0; a < nx; ++a) {
      double row = 0.0;
      for (int b = 0; b < ny; ++b) {
        MultiIndexDeriv d;
        d.na = tx[a].n;
        d.a = {tx[a].idx[0], tx[a].idx[1]};
        d.nb = ty[b].n;
        d.b = {ty[b].idx[0], ty[b].idx[1]};
        row += ty[b].w * t.derivative(d);
      }
      h += tx[a].w * row;
    }
    return h;
  }

  int order_;
  Q q_;
  Kernel k_;
  std::vector<Point> reference_;
  std::vector<typename Jet::EVec> ref_phi_;
  double c_hat_ = 0.0;
};

template <UnnormalizedDensity Q>
double stein_kernel_1(const Q& q, const ExpKernel<typename Q::chart_type>& k,
                      const typename Q::chart_type::Point& x, const typename Q::chart_type::Point& y) {
  return SteinKernel<Q>(1, q, k)(x, y);
}

template <UnnormalizedDensity Q>
double stein_kernel_2(const Q& q, const ExpKernel<typename Q::chart_type>& k,
                      const typename Q::chart_type::Point& x, const typename Q::chart_type::Point& y) {
  return SteinKernel<Q>(2, q, k)(x, y);
}

/// Sample-estimated zeroth-order Stein kernel.
template <Chart C>
double stein_kernel_0(std::span<const typename C::Point> q_samples, const ExpKernel<C>& k,
                      const typename C::Point& x, const typename C::Point& y) {
  std::vector<typename C::Point> ref(q_samples.begin(), q_samples.end());
  return SteinKernel<Uniform<C>>(0, Uniform<C>{k.chart()}, k, std::move(ref))(x, y);
}

template <UnnormalizedDensity Q>
SteinGram stein_gram(const SteinKernel<Q>& sk, std::span<const typename Q::chart_type::Point> pts) {
  return sk.gram(pts);
}

/// First-order operator applied to f = k(z, ·) componentwise, at x:
/// (A⁽¹⁾f)_i(x) = s_i(x) k(z,x) + ∂_{x_i} k(z,x).
template <UnnormalizedDensity Q>
typename Q::chart_type::Vector apply_stein_operator_1(const Q& q, const ExpKernel<typename Q::chart_type>& k,
                                                      const typename Q::chart_type::Point& z,
                                                      const typename Q::chart_type::Point& x) {
  using C = typename Q::chart_type;
  const auto s = stein_score(q, x);
  const auto t = k.table(k.chart().jet(x), k.chart().jet(z), false);
  typename C::Vector out;
  for (int i = 0; i < C::dim; ++i) out(i) = t.k * (s(i) + t.a[C::Jet::first(i)][0]);
  return out;
}

/// Second-order operator applied to f̃ = k(z, ·), at x:
/// A⁽²⁾f̃(x) = Σ_ij g^{ij}(x) [∂_i∂_j f̃ + s_i(x) ∂_j f̃].
template <UnnormalizedDensity Q>
double apply_stein_operator_2(const Q& q, const ExpKernel<typename Q::chart_type>& k,
                              const typename Q::chart_type::Point& z, const typename Q::chart_type::Point& x) {
  using C = typename Q::chart_type;
  const auto s = stein_score(q, x);
  const auto gi = k.chart().inverse_metric(x);
  const auto t = k.table(k.chart().jet(x), k.chart().jet(z), true);
  double out = 0.0;
  for (int i = 0; i < C::dim; ++i) {
    for (int j = 0; j < C::dim; ++j) {
      const double dj = t.derivative(MultiIndexDeriv::make({j}, {}));
      const double dij = t.derivative(MultiIndexDeriv::make({i, j}, {}));
      out += gi(i, j) * (dij + s(i) * dj);
    }
  }
  return out;
}

/// A⁽¹⁾_q k(x, ·) evaluated at v: component i is s_i(x)k(x,v) + ∂_{x_i}k(x,v).
template <UnnormalizedDensity Q>
class WitnessEvaluator {
 public:
  using C = typename Q::chart_type;
  using Point = typename C::Point;
  using Vector = typename C::Vector;

  WitnessEvaluator(const Q& q, ExpKernel<C> k, std::span<const Point> data) : k_(std::move(k)) {
    const C& chart = k_.chart();
    jets_.reserve(data.size());
    scores_.reserve(data.size());
    for (const auto& x : data) {
      chart.check_interior(x);
      jets_.push_back(chart.jet(x));
      scores_.push_back(stein_score(q, x));
    }
  }

  std::size_t size() const { return jets_.size(); }
  const ExpKernel<C>& kernel() const { return k_; }

  /// Feature of data point i at location v (given the location's jet).
  Vector feature(std::size_t i, const typename C::Jet& jv) const {
    const auto& jx = jets_[i];
    const auto& w = k_.weights();
    const double k = std::exp(k_.exponent(jx.slot[0], jv.slot[0]));
    Vector f;
    for (int d = 0; d < C::dim; ++d) {
      const double dx = k * (w.array() * jx.slot[C::Jet::first(d)].array() * jv.slot[0].array()).sum();
      f(d) = scores_[i](d) * k + dx;
    }
    return f;
  }

  /// Empirical witness ŝ_p(v).
  Vector witness(const Point& v) const {
    k_.chart().check_interior(v);
    const auto jv = k_.chart().jet(v);
    Vector acc = Vector::Zero();
    for (std::size_t i = 0; i < jets_.size(); ++i) acc += feature(i, jv);
    return acc / static_cast<double>(jets_.size());
  }

 private:
  ExpKernel<C> k_;
  std::vector<typename C::Jet> jets_;
  std::vector<Vector> scores_;
};

template <UnnormalizedDensity Q>
typename Q::chart_type::Vector witness_at(const Q& q, const ExpKernel<typename Q::chart_type>& k,
                                          std::span<const typename Q::chart_type::Point> data,
                                          const typename Q::chart_type::Point& v) {
  if (data.empty()) throw TooFewSamples(0, 1);
  return WitnessEvaluator<Q>(q, k, data).witness(v);
}

}  // namespace mksd
