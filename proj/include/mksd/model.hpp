#pragma once

// Unnormalized densities. Each model exposes log q̃(x) and its coordinate
// gradient; stein_score() adds the chart's ∂ log J so that Stein kernels see
// ∂ log(q̃J) only. Normalization constants never enter.

#include <Eigen/Dense>

#include <cmath>

#include "mksd/manifold.hpp"

namespace mksd {

template <class Q>
concept UnnormalizedDensity = requires(const Q& q, const typename Q::chart_type::Point& x) {
  typename Q::chart_type;
  { q.chart() } -> std::convertible_to<const typename Q::chart_type&>;
  { q.log_unnorm(x) } -> std::convertible_to<double>;
  { q.score(x) } -> std::convertible_to<typename Q::chart_type::Vector>;
};

/// ∂ log(q̃ J): model score plus the chart's log-volume gradient.
template <UnnormalizedDensity Q>
typename Q::chart_type::Vector stein_score(const Q& q, const typename Q::chart_type::Point& x) {
  return q.score(x) + q.chart().grad_log_volume(x);
}

/// Uniform density with respect to the Riemannian volume.
template <Chart C>
struct Uniform {
  using chart_type = C;
  C chart_{};

  const C& chart() const { return chart_; }
  double log_unnorm(const typename C::Point& x) const {
    chart_.check_interior(x);
    return 0.0;
  }
  typename C::Vector score(const typename C::Point& x) const {
    chart_.check_interior(x);
    return C::Vector::Zero();
  }
};

/// von Mises on the circle, q̃(x) = exp(κ cos(x − μ)).
struct VonMises {
  using chart_type = Circle;
  double kappa = 0.0;
  double mu = 0.0;
  Circle chart_{};

  const Circle& chart() const { return chart_; }
  double log_unnorm(const Circle::Point& x) const { return kappa * std::cos(x(0) - mu); }
  Circle::Vector score(const Circle::Point& x) const {
    return Circle::Vector(-kappa * std::sin(x(0) - mu));
  }
};

/// Bivariate von Mises (sine model) on the torus. λ₁₂ = 0 gives the
/// factorized product of two von Mises marginals.
struct BivariateVonMises {
  using chart_type = Torus;
  double kappa1 = 0.0, kappa2 = 0.0;
  double mu1 = 0.0, mu2 = 0.0;
  double lambda12 = 0.0;
  Torus chart_{};

  const Torus& chart() const { return chart_; }

  double log_unnorm(const Torus::Point& x) const {
    const double a = x(0) - mu1, b = x(1) - mu2;
    return kappa1 * std::cos(a) + kappa2 * std::cos(b) + lambda12 * std::sin(a) * std::sin(b);
  }

  Torus::Vector score(const Torus::Point& x) const {
    const double a = x(0) - mu1, b = x(1) - mu2;
    const double sa = std::sin(a), ca = std::cos(a), sb = std::sin(b), cb = std::cos(b);
    return Torus::Vector(-kappa1 * sa + lambda12 * ca * sb, -kappa2 * sb + lambda12 * sa * cb);
  }

  BivariateVonMises factorized() const {
    BivariateVonMises f = *this;
    f.lambda12 = 0.0;
    return f;
  }
};

/// Fisher (matrix Langevin) distribution on SO(3), q̃(X) = exp(tr(FᵀX)).
struct FisherSO3 {
  using chart_type = SO3Euler;
  Eigen::Matrix3d F = Eigen::Matrix3d::Zero();
  SO3Euler chart_{};

  FisherSO3() = default;
  explicit FisherSO3(const Eigen::Matrix3d& f, SO3Euler chart = {}) : F(f), chart_(chart) {}

  /// Exponential-trace distribution exp(κ tr X).
  static FisherSO3 exp_trace(double kappa) { return FisherSO3(kappa * Eigen::Matrix3d::Identity()); }

  const SO3Euler& chart() const { return chart_; }

  double log_unnorm(const SO3Euler::Point& x) const {
    chart_.check_interior(x);
    return (F.array() * SO3Euler::euler_to_matrix(x).array()).sum();
  }

  SO3Euler::Vector score(const SO3Euler::Point& x) const {
    chart_.check_interior(x);
    SO3Euler::Vector s;
    s(0) = (F.array() * SO3Euler::euler_derivative(x, 1, 0, 0).array()).sum();
    s(1) = (F.array() * SO3Euler::euler_derivative(x, 0, 1, 0).array()).sum();
    s(2) = (F.array() * SO3Euler::euler_derivative(x, 0, 0, 1).array()).sum();
    return s;
  }
};

/// F_b = [[1, b, 0], [b, 1, 0], [0, 0, 1]], the perturbed Fisher parameter.
inline Eigen::Matrix3d fisher_perturbation(double b) {
  Eigen::Matrix3d f;
  f << 1, b, 0, b, 1, 0, 0, 0, 1;
  return f;
}

/// Fisher fit to the vectorcardiogram data (children aged 2 to 10).
inline Eigen::Matrix3d vectorcardiogram_fisher_fit() {
  Eigen::Matrix3d f;
  f << 0.583, 0.629, 0.514, 0.660, -0.736, 0.151, 0.473, 0.252, -0.844;
  return 5.63 * f;
}

/// Bivariate von Mises fit to the Tokyo wind-direction data.
inline BivariateVonMises wind_direction_fit() {
  return BivariateVonMises{0.7170, 0.3954, 1.1499, 1.1499, -1.1274};
}

}  // namespace mksd
