#pragma once

// Exponential inner-product kernels k(x, y) = exp(Σ_m w_m Φ_m(x) Φ_m(y)) on
// a chart embedding Φ. With the embeddings in manifold.hpp these are
//   circle: exp(η cos(x − y))
//   torus:  exp(η₁ cos(x₁ − y₁) + η₂ cos(x₂ − y₂))
//   SO(3):  exp(η tr(XᵀY))
// Mixed partials up to order (2, 2) follow from Faà di Bruno's formula over
// set partitions of the requested derivative slots, since every partial of
// the exponent is again an inner product of embedding jets.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "mksd/errors.hpp"
#include "mksd/manifold.hpp"

namespace mksd {

/// Derivative request: coordinates differentiated in x (a) and in y (b), at most two each.
struct MultiIndexDeriv {
  std::array<int, 2> a{};
  int na = 0;
  std::array<int, 2> b{};
  int nb = 0;

  static MultiIndexDeriv make(std::initializer_list<int> xs, std::initializer_list<int> ys) {
    if (xs.size() > 2 || ys.size() > 2) throw UsageError("kernel derivatives are limited to order 2 per argument");
    MultiIndexDeriv d;
    for (int v : xs) d.a[d.na++] = v;
    for (int v : ys) d.b[d.nb++] = v;
    return d;
  }

  MultiIndexDeriv swapped() const { return MultiIndexDeriv{b, nb, a, na}; }

  friend bool operator==(const MultiIndexDeriv&, const MultiIndexDeriv&) = default;
};

namespace detail {

// Restricted growth strings for set partitions of up to four slots.
struct PartitionTable {
  // parts[n] lists partitions of {0..n-1}; each is a block label per slot.
  std::array<std::vector<std::array<int, 4>>, 5> parts;
  std::array<std::vector<int>, 5> nblocks;

  PartitionTable() {
    for (int n = 0; n <= 4; ++n) {
      std::array<int, 4> rgs{};
      enumerate(n, 0, 0, rgs);
    }
  }

 private:
  void enumerate(int n, int pos, int maxb, std::array<int, 4>& rgs) {
    if (pos == n) {
      parts[n].push_back(rgs);
      nblocks[n].push_back(maxb);
      return;
    }
    for (int b = 0; b <= maxb; ++b) {
      rgs[pos] = b;
      enumerate(n, pos + 1, std::max(maxb, b + 1), rgs);
    }
  }
};

inline const PartitionTable& partitions() {
  static const PartitionTable table;
  return table;
}

}  // namespace detail

/// Table of exponent partials A[s][t] = Σ_m w_m (∂^s Φ(x))_m (∂^t Φ(y))_m over jet slots.
template <Chart C>
struct ExponentTable {
  using Jet = typename C::Jet;
  static constexpr int kSlots = Jet::kSlots;
  std::array<std::array<double, kSlots>, kSlots> a;
  double k;  // kernel value exp(a[0][0])

  static int slot_of(const int* idx, int n) {
    if (n == 0) return 0;
    if (n == 1) return Jet::first(idx[0]);
    return Jet::second(idx[0], idx[1]);
  }

  /// ∂ᵃ_x ∂ᵇ_y k via Faà di Bruno.
  double derivative(const MultiIndexDeriv& d) const {
    const int n = d.na + d.nb;
    if (n == 0) return k;
    const auto& table = detail::partitions();
    // slot list: x-coordinates first, then y-coordinates
    int coord[4];
    bool is_x[4];
    for (int i = 0; i < d.na; ++i) coord[i] = d.a[i], is_x[i] = true;
    for (int i = 0; i < d.nb; ++i) coord[d.na + i] = d.b[i], is_x[d.na + i] = false;
    double total = 0.0;
    for (std::size_t p = 0; p < table.parts[n].size(); ++p) {
      const auto& rgs = table.parts[n][p];
      double prod = 1.0;
      for (int blk = 0; blk < table.nblocks[n][p]; ++blk) {
        int xs[2], ys[2], nx = 0, ny = 0;
        for (int s = 0; s < n; ++s) {
          if (rgs[s] != blk) continue;
          if (is_x[s]) xs[nx++] = coord[s]; else ys[ny++] = coord[s];
        }
        prod *= a[slot_of(xs, nx)][slot_of(ys, ny)];
      }
      total += prod;
    }
    return k * total;
  }
};

/// Exponential inner-product kernel on chart C.
template <Chart C>
class ExpKernel {
 public:
  using chart_type = C;
  using Point = typename C::Point;
  using Jet = typename C::Jet;
  using Weights = Eigen::Matrix<double, C::embed_dim, 1>;
  using Table = ExponentTable<C>;

  ExpKernel() = default;
  ExpKernel(C chart, std::vector<double> params) : chart_(chart) { set_params(std::move(params)); }

  const C& chart() const { return chart_; }
  const std::vector<double>& params() const { return params_; }
  const Weights& weights() const { return w_; }

  ExpKernel with_params(std::vector<double> params) const {
    ExpKernel out = *this;
    out.set_params(std::move(params));
    return out;
  }

  double eval(const Point& x, const Point& y) const {
    return std::exp(exponent(chart_.jet(x).slot[0], chart_.jet(y).slot[0]));
  }

  /// Exponent partial table from two precomputed jets; `full` fills every
  /// slot pair, otherwise only value and first-order slots.
  Table table(const Jet& jx, const Jet& jy, bool full = true) const {
    Table t;
    const int lim = full ? Table::kSlots : 1 + C::dim;
    for (int s = 0; s < lim; ++s) {
      const auto wx = (w_.array() * jx.slot[s].array()).eval();
      for (int r = 0; r < lim; ++r) t.a[s][r] = (wx * jy.slot[r].array()).sum();
    }
    t.k = std::exp(t.a[0][0]);
    return t;
  }

  /// Analytic mixed partial ∂ᵃ_x ∂ᵇ_y k(x, y). Evaluated in a canonical
  /// argument order so that deriv(a,b,x,y) == deriv(b,a,y,x) bit for bit.
  double deriv(const MultiIndexDeriv& d, const Point& x, const Point& y) const {
    for (int i = 0; i < d.na; ++i) check_coord(d.a[i]);
    for (int i = 0; i < d.nb; ++i) check_coord(d.b[i]);
    chart_.check_interior(x);
    chart_.check_interior(y);
    if (canonical_swap(x, y, d)) return deriv(d.swapped(), y, x);
    return table(chart_.jet(x), chart_.jet(y)).derivative(d);
  }

  Eigen::MatrixXd gram(std::span<const Point> pts) const {
    const auto n = static_cast<Eigen::Index>(pts.size());
    std::vector<typename Jet::EVec> phi(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) phi[i] = chart_.jet(pts[i]).slot[0];
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) {
        g(i, j) = g(j, i) = std::exp(exponent(phi[i], phi[j]));
      }
    }
    return g;
  }

  double exponent(const typename Jet::EVec& px, const typename Jet::EVec& py) const {
    return (w_.array() * px.array() * py.array()).sum();
  }

 private:
  void set_params(std::vector<double> params) {
    for (double p : params) {
      if (!(p > 0.0) || !std::isfinite(p)) throw UsageError("kernel parameters must be positive and finite");
    }
    if constexpr (C::kind == ManifoldKind::Torus2) {
      if (params.size() != 2) throw UsageError("torus kernel needs two parameters (eta1, eta2)");
      w_ << params[0], params[0], params[1], params[1];
    } else {
      if (params.size() != 1) throw UsageError("kernel needs exactly one parameter (eta)");
      w_.setConstant(params[0]);
    }
    params_ = std::move(params);
  }

  void check_coord(int i) const {
    if (i < 0 || i >= C::dim) throw UsageError("derivative coordinate out of range");
  }

  static bool canonical_swap(const Point& x, const Point& y, const MultiIndexDeriv& d) {
    for (int i = 0; i < C::dim; ++i) {
      if (x(i) != y(i)) return x(i) > y(i);
    }
    // identical points: order the multi-indices instead
    const std::array<int, 5> ka{d.na, d.a[0], d.a[1], d.nb, d.b[0]};
    const std::array<int, 5> kb{d.nb, d.b[0], d.b[1], d.na, d.a[0]};
    return kb < ka;
  }

  C chart_{};
  std::vector<double> params_{1.0};
  Weights w_ = Weights::Ones();
};

/// k(x,y) = exp(η cos(x − y)) on the circle.
inline ExpKernel<Circle> von_mises_kernel(double eta, Circle chart = {}) { return {chart, {eta}}; }

/// k(x,y) = exp(η₁ cos(x₁ − y₁) + η₂ cos(x₂ − y₂)) on the torus.
inline ExpKernel<Torus> product_von_mises_kernel(double eta1, double eta2, Torus chart = {}) {
  return {chart, {eta1, eta2}};
}

/// k(X,Y) = exp(η tr(XᵀY)) on SO(3).
inline ExpKernel<SO3Euler> exp_trace_kernel(double eta, SO3Euler chart = {}) { return {chart, {eta}}; }

/// Median-heuristic starting parameters: 1 / median over pairs of (max − similarity),
/// per axis on the torus.
template <Chart C>
std::vector<double> median_heuristic(std::span<const typename C::Point> pts, const C& chart = {}) {
  auto median_inverse = [](std::vector<double>& gaps) {
    if (gaps.empty()) return 1.0;
    auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
    std::nth_element(gaps.begin(), mid, gaps.end());
    double m = *mid;
    if (!(m > 1e-12)) {
      double s = 0.0;
      for (double v : gaps) s += v;
      m = s / static_cast<double>(gaps.size());
    }
    return m > 1e-12 ? 1.0 / m : 1.0;
  };
  const std::size_t n = pts.size();
  if constexpr (C::kind == ManifoldKind::SO3Euler) {
    std::vector<RotationMatrix> rot(n);
    for (std::size_t i = 0; i < n; ++i) rot[i] = C::euler_to_matrix(pts[i]);
    std::vector<double> gaps;
    gaps.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) gaps.push_back(3.0 - (rot[i].array() * rot[j].array()).sum());
    return {median_inverse(gaps)};
  } else {
    (void)chart;
    std::vector<double> out;
    for (int axis = 0; axis < C::dim; ++axis) {
      std::vector<double> gaps;
      gaps.reserve(n * (n - 1) / 2);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) gaps.push_back(1.0 - std::cos(pts[i](axis) - pts[j](axis)));
      out.push_back(median_inverse(gaps));
    }
    return out;
  }
}

}  // namespace mksd
