#pragma once

// Coordinate charts on the circle, the flat 2-torus and SO(3) (ZYZ Euler
// angles), together with the metric quantities the Stein operators need and
// the embedding jets the exponential kernels are built from.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>

#include "mksd/errors.hpp"

namespace mksd {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reduce an angle into [0, 2π).
inline double wrap_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod of a tiny negative number can round up to exactly 2π
  if (r >= kTwoPi) r = 0.0;
  return r;
}

using RotationMatrix = Eigen::Matrix3d;

enum class ManifoldKind { Circle, Torus2, SO3Euler };

inline std::string_view to_string(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::Circle: return "circle";
    case ManifoldKind::Torus2: return "torus";
    case ManifoldKind::SO3Euler: return "so3";
  }
  return "?";
}

/// Derivative jet of the chart's embedding Φ: value, first and second
/// coordinate partials. Second partials are stored for i <= j.
template <int Dim, int EmbedDim>
struct EmbeddingJet {
  static constexpr int kSecond = Dim * (Dim + 1) / 2;
  static constexpr int kSlots = 1 + Dim + kSecond;
  using EVec = Eigen::Matrix<double, EmbedDim, 1>;

  /// slot 0: Φ, slots 1..Dim: ∂_iΦ, then ∂_i∂_jΦ for i <= j in row order.
  std::array<EVec, kSlots> slot;

  static constexpr int first(int i) { return 1 + i; }
  static constexpr int second(int i, int j) {
    if (i > j) std::swap(i, j);
    // offset of row i in the packed upper triangle
    return 1 + Dim + i * Dim - i * (i - 1) / 2 + (j - i);
  }
};

namespace detail {

// Shared metric-scale handling. A chart with metric_scale c uses c·g.
struct ScaledMetric {
  double metric_scale = 1.0;
};

}  // namespace detail

/// The unit circle, coordinate x ∈ [0, 2π), embedding (cos x, sin x).
struct Circle : detail::ScaledMetric {
  static constexpr int dim = 1;
  static constexpr int embed_dim = 2;
  static constexpr ManifoldKind kind = ManifoldKind::Circle;
  using Point = Eigen::Matrix<double, 1, 1>;
  using Vector = Eigen::Matrix<double, 1, 1>;
  using Matrix = Eigen::Matrix<double, 1, 1>;
  using Jet = EmbeddingJet<1, 2>;

  static Point point(double x) { return Point(x); }

  Point wrap(const Point& raw) const { return Point(wrap_angle(raw(0))); }
  void check_interior(const Point&) const {}

  Matrix metric_tensor(const Point&) const { return Matrix(metric_scale); }
  Matrix inverse_metric(const Point&) const { return Matrix(1.0 / metric_scale); }
  double volume_element(const Point&) const { return std::sqrt(metric_scale); }
  Vector grad_log_volume(const Point&) const { return Vector::Zero(); }

  Jet jet(const Point& x) const {
    const double c = std::cos(x(0)), s = std::sin(x(0));
    Jet j;
    j.slot[0] << c, s;
    j.slot[Jet::first(0)] << -s, c;
    j.slot[Jet::second(0, 0)] << -c, -s;
    return j;
  }
};

/// The flat torus S¹ × S¹ with the product chart; embedding (cos x₁, sin x₁, cos x₂, sin x₂).
struct Torus : detail::ScaledMetric {
  static constexpr int dim = 2;
  static constexpr int embed_dim = 4;
  static constexpr ManifoldKind kind = ManifoldKind::Torus2;
  using Point = Eigen::Vector2d;
  using Vector = Eigen::Vector2d;
  using Matrix = Eigen::Matrix2d;
  using Jet = EmbeddingJet<2, 4>;

  static Point point(double x1, double x2) { return Point(x1, x2); }

  Point wrap(const Point& raw) const { return Point(wrap_angle(raw(0)), wrap_angle(raw(1))); }
  void check_interior(const Point&) const {}

  Matrix metric_tensor(const Point&) const { return metric_scale * Matrix::Identity(); }
  Matrix inverse_metric(const Point&) const { return Matrix::Identity() / metric_scale; }
  double volume_element(const Point&) const { return metric_scale; }
  Vector grad_log_volume(const Point&) const { return Vector::Zero(); }

  Jet jet(const Point& x) const {
    const double c1 = std::cos(x(0)), s1 = std::sin(x(0));
    const double c2 = std::cos(x(1)), s2 = std::sin(x(1));
    Jet j;
    j.slot[0] << c1, s1, c2, s2;
    j.slot[Jet::first(0)] << -s1, c1, 0, 0;
    j.slot[Jet::first(1)] << 0, 0, -s2, c2;
    j.slot[Jet::second(0, 0)] << -c1, -s1, 0, 0;
    j.slot[Jet::second(0, 1)].setZero();
    j.slot[Jet::second(1, 1)] << 0, 0, -c2, -s2;
    return j;
  }
};

/// Elementary rotations and their derivatives for the ZYZ factorization.
namespace euler {

inline Eigen::Matrix3d rot_z(double a, int order = 0) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  switch (order) {
    case 0: m << c, -s, 0, s, c, 0, 0, 0, 1; break;
    case 1: m << -s, -c, 0, c, -s, 0, 0, 0, 0; break;
    default: m << -c, s, 0, -s, -c, 0, 0, 0, 0; break;
  }
  return m;
}

inline Eigen::Matrix3d rot_y(double a, int order = 0) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  switch (order) {
    case 0: m << c, 0, s, 0, 1, 0, -s, 0, c; break;
    case 1: m << -s, 0, c, 0, 0, 0, -c, 0, -s; break;
    default: m << -c, 0, -s, 0, 0, 0, s, 0, -c; break;
  }
  return m;
}

}  // namespace euler

/// SO(3) in ZYZ Euler angles (φ, θ, ψ) with X = R_z(φ) R_y(θ) R_z(ψ).
/// The metric is the Frobenius pullback g_ij = tr(∂_iXᵀ ∂_jX), optionally
/// multiplied by metric_scale.
struct SO3Euler : detail::ScaledMetric {
  static constexpr int dim = 3;
  static constexpr int embed_dim = 9;
  static constexpr ManifoldKind kind = ManifoldKind::SO3Euler;
  static constexpr double kSingularTol = 1e-12;
  static constexpr double kGimbalTol = 1e-10;
  using Point = Eigen::Vector3d;
  using Vector = Eigen::Vector3d;
  using Matrix = Eigen::Matrix3d;
  using Jet = EmbeddingJet<3, 9>;

  static Point point(double phi, double theta, double psi) { return Point(phi, theta, psi); }

  /// Angles into [0, 2π); θ into [0, π] via (φ, −θ, ψ) ≅ (φ+π, θ, ψ+π).
  Point wrap(const Point& raw) const {
    double phi = raw(0), theta = wrap_angle(raw(1)), psi = raw(2);
    if (theta > std::numbers::pi) {
      theta = kTwoPi - theta;
      phi += std::numbers::pi;
      psi += std::numbers::pi;
    }
    return Point(wrap_angle(phi), theta, wrap_angle(psi));
  }

  static bool is_singular(const Point& x) {
    return x(1) < kSingularTol || std::numbers::pi - x(1) < kSingularTol;
  }

  void check_interior(const Point& x) const {
    if (is_singular(x)) {
      throw SingularChartPoint("SO(3) Euler chart is singular at theta=" + std::to_string(x(1)));
    }
  }

  Matrix metric_tensor(const Point& x) const {
    check_interior(x);
    const double c = std::cos(x(1));
    Matrix g;
    g << 2, 0, 2 * c, 0, 2, 0, 2 * c, 0, 2;
    return metric_scale * g;
  }

  Matrix inverse_metric(const Point& x) const {
    check_interior(x);
    const double c = std::cos(x(1)), s = std::sin(x(1));
    const double s2 = s * s;
    Matrix gi;
    gi << 1, 0, -c, 0, s2, 0, -c, 0, 1;
    return gi / (2.0 * s2 * metric_scale);
  }

  double volume_element(const Point& x) const {
    check_interior(x);
    return std::pow(metric_scale, 1.5) * 2.0 * std::numbers::sqrt2 * std::sin(x(1));
  }

  Vector grad_log_volume(const Point& x) const {
    check_interior(x);
    return Vector(0.0, std::cos(x(1)) / std::sin(x(1)), 0.0);
  }

  static RotationMatrix euler_to_matrix(const Point& x) {
    return euler::rot_z(x(0)) * euler::rot_y(x(1)) * euler::rot_z(x(2));
  }

  /// Inverse chart map. Throws GimbalLock on the singular set |X₃₃| > 1 − 1e-10.
  static Point matrix_to_euler(const RotationMatrix& m) {
    if (std::abs(m(2, 2)) > 1.0 - kGimbalTol) {
      throw GimbalLock("rotation lies on the Euler-angle singular set (|X33| = " +
                       std::to_string(std::abs(m(2, 2))) + ")");
    }
    const double theta = std::acos(std::clamp(m(2, 2), -1.0, 1.0));
    const double phi = std::atan2(m(1, 2), m(0, 2));
    const double psi = std::atan2(m(2, 1), -m(2, 0));
    return Point(wrap_angle(phi), theta, wrap_angle(psi));
  }

  /// Partial derivatives of X(φ, θ, ψ): orders per coordinate, e.g. {1,0,1} = ∂φ∂ψ X.
  static Eigen::Matrix3d euler_derivative(const Point& x, int dphi, int dtheta, int dpsi) {
    return euler::rot_z(x(0), dphi) * euler::rot_y(x(1), dtheta) * euler::rot_z(x(2), dpsi);
  }

  Jet jet(const Point& x) const {
    const Eigen::Matrix3d z1[3] = {euler::rot_z(x(0), 0), euler::rot_z(x(0), 1), euler::rot_z(x(0), 2)};
    const Eigen::Matrix3d y[3] = {euler::rot_y(x(1), 0), euler::rot_y(x(1), 1), euler::rot_y(x(1), 2)};
    const Eigen::Matrix3d z2[3] = {euler::rot_z(x(2), 0), euler::rot_z(x(2), 1), euler::rot_z(x(2), 2)};
    auto flat = [](const Eigen::Matrix3d& m) {
      return Eigen::Map<const Eigen::Matrix<double, 9, 1>>(m.data());
    };
    auto d = [&](int a, int b, int c) -> Eigen::Matrix<double, 9, 1> {
      return flat(z1[a] * y[b] * z2[c]);
    };
    Jet j;
    j.slot[0] = d(0, 0, 0);
    j.slot[Jet::first(0)] = d(1, 0, 0);
    j.slot[Jet::first(1)] = d(0, 1, 0);
    j.slot[Jet::first(2)] = d(0, 0, 1);
    j.slot[Jet::second(0, 0)] = d(2, 0, 0);
    j.slot[Jet::second(0, 1)] = d(1, 1, 0);
    j.slot[Jet::second(0, 2)] = d(1, 0, 1);
    j.slot[Jet::second(1, 1)] = d(0, 2, 0);
    j.slot[Jet::second(1, 2)] = d(0, 1, 1);
    j.slot[Jet::second(2, 2)] = d(0, 0, 2);
    return j;
  }
};

template <class C>
concept Chart = requires(const C& c, const typename C::Point& x) {
  { C::dim } -> std::convertible_to<int>;
  { c.wrap(x) } -> std::same_as<typename C::Point>;
  c.metric_tensor(x);
  c.inverse_metric(x);
  { c.volume_element(x) } -> std::convertible_to<double>;
  c.grad_log_volume(x);
  c.jet(x);
};

/// Frobenius distance of XᵀX from I₃ plus |det X − 1|.
inline double rotation_defect(const Eigen::Matrix3d& m) {
  return (m.transpose() * m - Eigen::Matrix3d::Identity()).norm() + std::abs(m.determinant() - 1.0);
}

}  // namespace mksd
