#pragma once

// Approximate Bahadur slopes E_p[h]/sqrt(E_q[h²]) of the order-c tests on the
// circle by double trapezoid quadrature, and relative efficiencies between
// orders for von Mises alternatives against a fixed null.

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "mksd/errors.hpp"
#include "mksd/kernel.hpp"
#include "mksd/model.hpp"
#include "mksd/stein.hpp"

namespace mksd {

struct SlopeResult {
  double numerator = 0.0;    // E_p[h]
  double denominator = 0.0;  // sqrt(E_q[h²])
  double slope = 0.0;
};

inline constexpr int kDefaultQuadratureGrid = 1024;
inline constexpr double kQuadratureRelTol = 1e-6;

/// Normalized trapezoid weights p(x_a)·2π/N of an unnormalized circle density.
template <UnnormalizedDensity P>
  requires(P::chart_type::kind == ManifoldKind::Circle)
Eigen::VectorXd circle_weights(const P& p, int n) {
  Eigen::VectorXd w(n);
  for (int a = 0; a < n; ++a) w(a) = p.log_unnorm(Circle::point(kTwoPi * a / n));
  w = (w.array() - w.maxCoeff()).exp();
  return w / w.sum();
}

/// Stein-kernel matrix of order c on the N-point grid of the circle. For
/// c = 0 the centring uses the exact ξ(x) = E_q k(x,·) and C = E_q E_q k by quadrature.
template <UnnormalizedDensity Q>
  requires(Q::chart_type::kind == ManifoldKind::Circle)
class CircleStein {
 public:
  CircleStein(int order, const Q& q, const ExpKernel<Circle>& k, int n) : order_(order), n_(n) {
    if (order < 0 || order > 2) throw UsageError("Stein kernel order must be 0, 1 or 2");
    if (n < 2) throw UsageError("quadrature grid needs at least two nodes");
    std::vector<Circle::Point> grid(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) grid[static_cast<std::size_t>(a)] = Circle::point(kTwoPi * a / n);
    wq_ = circle_weights(q, n);
    if (order == 0) {
      h_ = k.gram(grid);
      const Eigen::VectorXd xi = h_ * wq_;
      const double c = wq_.dot(xi);
      h_.colwise() -= xi;
      h_.rowwise() -= xi.transpose();
      h_.array() += c;
    } else {
      h_ = SteinKernel<Q>(order, q, k).gram(grid).matrix;
    }
    denominator_ = std::sqrt(wq_.dot(h_.array().square().matrix() * wq_));
  }

  int order() const { return order_; }
  int grid_size() const { return n_; }
  const Eigen::MatrixXd& matrix() const { return h_; }
  double denominator() const { return denominator_; }

  template <UnnormalizedDensity P>
  double numerator(const P& p) const {
    const Eigen::VectorXd wp = circle_weights(p, n_);
    return wp.dot(h_ * wp);
  }

  template <UnnormalizedDensity P>
  SlopeResult slope(const P& p) const {
    SlopeResult r;
    r.numerator = numerator(p);
    r.denominator = denominator_;
    if (!(r.denominator > 0.0)) throw NumericalError("slope denominator is not positive");
    r.slope = r.numerator / r.denominator;
    return r;
  }

 private:
  int order_;
  int n_;
  Eigen::VectorXd wq_;
  Eigen::MatrixXd h_;
  double denominator_ = 0.0;
};

/// Throws QuadratureUnderResolved unless the grid-doubled value agrees.
inline void check_resolved(double coarse, double fine, const char* what) {
  if (std::abs(fine - coarse) > kQuadratureRelTol * std::abs(fine) + 1e-12) {
    throw QuadratureUnderResolved(std::string(what) + " changed from " + std::to_string(coarse) + " to " +
                                  std::to_string(fine) + " when the quadrature grid was doubled");
  }
}

/// Approximate Bahadur slope of the order-c test at alternative p, null q.
template <UnnormalizedDensity P, UnnormalizedDensity Q>
  requires(Q::chart_type::kind == ManifoldKind::Circle)
SlopeResult bahadur_slope(int c, const P& p, const Q& q, const ExpKernel<Circle>& k,
                          int grid_size = kDefaultQuadratureGrid) {
  if (grid_size < 256) throw UsageError("quadrature grid_size must be at least 256");
  const auto coarse = CircleStein<Q>(c, q, k, grid_size).slope(p);
  const auto fine = CircleStein<Q>(c, q, k, 2 * grid_size).slope(p);
  check_resolved(coarse.slope, fine.slope, "Bahadur slope");
  return fine;
}

struct EfficiencyPoint {
  double kappa = 0.0;
  SlopeResult first;   // order c1
  SlopeResult second;  // order c2
  double efficiency = 0.0;
};

/// E_{c1,c2}(κ) = slope_{c1}/slope_{c2} for p = von Mises(κ, μ) against q.
/// Stein matrices are built once per order and reused for every κ.
template <UnnormalizedDensity Q>
  requires(Q::chart_type::kind == ManifoldKind::Circle)
std::vector<EfficiencyPoint> relative_efficiency(int c1, int c2, std::span<const double> kappas, const Q& q,
                                                 const ExpKernel<Circle>& k, int grid_size = kDefaultQuadratureGrid,
                                                 double mu = 0.0) {
  if (kappas.empty()) throw EmptyGrid();
  if (grid_size < 256) throw UsageError("quadrature grid_size must be at least 256");
  for (double kappa : kappas) {
    if (!(kappa > 0.0)) throw UsageError("concentration values must be positive");
  }
  const CircleStein<Q> a_coarse(c1, q, k, grid_size), a_fine(c1, q, k, 2 * grid_size);
  const CircleStein<Q> b_coarse(c2, q, k, grid_size), b_fine(c2, q, k, 2 * grid_size);
  std::vector<EfficiencyPoint> out;
  for (double kappa : kappas) {
    const VonMises p{kappa, mu};
    EfficiencyPoint e;
    e.kappa = kappa;
    e.first = a_fine.slope(p);
    e.second = b_fine.slope(p);
    check_resolved(a_coarse.slope(p).slope, e.first.slope, "Bahadur slope");
    check_resolved(b_coarse.slope(p).slope, e.second.slope, "Bahadur slope");
    e.efficiency = e.first.slope / e.second.slope;
    out.push_back(e);
  }
  return out;
}

/// κ_i = κ_max · i / m for i = 1..m.
inline std::vector<double> kappa_grid(double kappa_max = 20.0, int m = 40) {
  if (m < 1 || !(kappa_max > 0.0)) throw EmptyGrid();
  std::vector<double> out;
  for (int i = 1; i <= m; ++i) out.push_back(kappa_max * i / m);
  return out;
}

}  // namespace mksd
