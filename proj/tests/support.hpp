#pragma once

// Independent numerical oracles shared by the unit tests.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Central difference of f along coordinate i.
template <class P>
double central_diff(const std::function<double(const P&)>& f, const P& x, int i, double h) {
  P xp = x, xm = x;
  xp(i) += h;
  xm(i) -= h;
  return (f(xp) - f(xm)) / (2.0 * h);
}

/// Periodic trapezoid rule of f over [0, 2π) with n nodes.
inline double trapezoid_circle(const std::function<double(double)>& f, int n) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += f(kTwoPi * i / n);
  return acc * kTwoPi / n;
}

/// Normalized von Mises density by trapezoid quadrature of the normalizer.
inline std::function<double(double)> von_mises_pdf(double kappa, double mu, int n = 4096) {
  const double z = trapezoid_circle([&](double x) { return std::exp(kappa * std::cos(x - mu)); }, n);
  return [=](double x) { return std::exp(kappa * std::cos(x - mu)) / z; };
}

/// ZYZ rotation built from elementary rotations, independent of the library.
inline Eigen::Matrix3d zyz(double phi, double theta, double psi) {
  return (Eigen::AngleAxisd(phi, Eigen::Vector3d::UnitZ()) * Eigen::AngleAxisd(theta, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(psi, Eigen::Vector3d::UnitZ()))
      .toRotationMatrix();
}

/// Finite-difference partials ∂X/∂θ^i of the ZYZ map.
inline Eigen::Matrix3d zyz_partial(const Eigen::Vector3d& x, int i, double h = 1e-5) {
  Eigen::Vector3d xp = x, xm = x;
  xp(i) += h;
  xm(i) -= h;
  return (zyz(xp(0), xp(1), xp(2)) - zyz(xm(0), xm(1), xm(2))) / (2.0 * h);
}

/// Kolmogorov–Smirnov distance of a sample from Uniform(0, 1).
inline double ks_uniform(std::vector<double> u) {
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    d = std::max(d, std::abs(u[i] - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - u[i]));
  }
  return d;
}

}  // namespace oracle

namespace oracle {

/// Upper-α chi-square critical value (Wilson–Hilferty), z the standard normal quantile.
inline double chi2_critical(double df, double z) {
  const double a = 2.0 / (9.0 * df);
  const double c = 1.0 - a + z * std::sqrt(a);
  return df * c * c * c;
}

inline constexpr double kZ99 = 2.3263478740408408;  // Φ⁻¹(0.99)

}  // namespace oracle
