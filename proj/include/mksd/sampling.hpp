#pragma once

// Samplers for the supported models: Haar-uniform SO(3) by Gaussian
// orthonormalization, rejection from Haar for exponential-trace and Fisher
// densities, Best–Fisher for von Mises, and Gibbs for the bivariate sine model.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "mksd/manifold.hpp"
#include "mksd/model.hpp"
#include "mksd/rng.hpp"

namespace mksd {

template <class P>
struct SampleBatch {
  std::vector<P> points;
  std::size_t proposals = 0;
  double acceptance_rate = 1.0;

  static constexpr double kLowAcceptance = 1e-4;
  bool low_acceptance() const { return acceptance_rate < kLowAcceptance; }
};

/// Haar-distributed rotation matrix.
inline RotationMatrix sample_haar_matrix(RngStream& rng) {
  Eigen::Matrix3d g;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::Matrix3d> qr(g);
  Eigen::Matrix3d q = qr.householderQ();
  const Eigen::Matrix3d r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < 3; ++i) {
    if (r(i, i) < 0.0) q.col(i) = -q.col(i);
  }
  if (q.determinant() < 0.0) q.col(0) = -q.col(0);
  return q;
}

/// Haar-uniform point in Euler coordinates, resampling off the singular set.
inline SO3Euler::Point sample_haar_point(RngStream& rng) {
  for (;;) {
    const RotationMatrix m = sample_haar_matrix(rng);
    if (std::abs(m(2, 2)) > 1.0 - SO3Euler::kGimbalTol) continue;
    return SO3Euler::matrix_to_euler(m);
  }
}

inline std::vector<SO3Euler::Point> sample_uniform_so3(RngStream& rng, std::size_t n) {
  std::vector<SO3Euler::Point> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_haar_point(rng));
  return out;
}

/// Rejection from Haar with log-acceptance tr(FᵀX) − Σσᵢ(F).
inline SampleBatch<SO3Euler::Point> sample_fisher_so3(RngStream& rng, const Eigen::Matrix3d& F, std::size_t n) {
  const double bound = Eigen::JacobiSVD<Eigen::Matrix3d>(F).singularValues().sum();
  SampleBatch<SO3Euler::Point> batch;
  batch.points.reserve(n);
  while (batch.points.size() < n) {
    const RotationMatrix m = sample_haar_matrix(rng);
    ++batch.proposals;
    const double log_accept = (F.array() * m.array()).sum() - bound;
    if (std::log(rng.uniform()) >= log_accept) continue;
    if (std::abs(m(2, 2)) > 1.0 - SO3Euler::kGimbalTol) continue;
    batch.points.push_back(SO3Euler::matrix_to_euler(m));
  }
  batch.acceptance_rate = static_cast<double>(n) / static_cast<double>(std::max<std::size_t>(batch.proposals, 1));
  return batch;
}

/// exp(κ tr X) by rejection with acceptance exp(κ(tr X − 3)).
inline SampleBatch<SO3Euler::Point> sample_exp_trace_so3(RngStream& rng, double kappa, std::size_t n) {
  return sample_fisher_so3(rng, kappa * Eigen::Matrix3d::Identity(), n);
}

/// One von Mises draw in [0, 2π) (Best & Fisher 1979).
inline double sample_von_mises_one(RngStream& rng, double kappa, double mu) {
  if (kappa < 1e-6) return kTwoPi * rng.uniform();
  const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
  const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa);
  const double r = (1.0 + rho * rho) / (2.0 * rho);
  for (;;) {
    const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
    const double z = std::cos(std::numbers::pi * u1);
    const double f = (1.0 + r * z) / (r + z);
    const double c = kappa * (r - f);
    if (c * (2.0 - c) - u2 > 0.0 || std::log(c / u2) + 1.0 - c >= 0.0) {
      const double theta = std::acos(std::clamp(f, -1.0, 1.0));
      return wrap_angle(mu + (u3 > 0.5 ? theta : -theta));
    }
  }
}

inline std::vector<double> sample_von_mises(RngStream& rng, double kappa, double mu, std::size_t n) {
  std::vector<double> out(n);
  for (auto& v : out) v = sample_von_mises_one(rng, kappa, mu);
  return out;
}

struct GibbsConfig {
  std::size_t burn_in = 500;
  std::size_t thin = 5;
};

/// Gibbs sampler for the bivariate von Mises sine model. Each full
/// conditional is von Mises after folding the interaction into one cosine.
inline std::vector<Torus::Point> sample_bivariate_vm(RngStream& rng, const BivariateVonMises& m, std::size_t n,
                                                     GibbsConfig cfg = {}) {
  const std::size_t thin = std::max<std::size_t>(cfg.thin, 1);
  double x1 = m.mu1, x2 = m.mu2;
  auto step = [&] {
    const double e1 = m.lambda12 * std::sin(x2 - m.mu2);
    x1 = sample_von_mises_one(rng, std::hypot(m.kappa1, e1), m.mu1 + std::atan2(e1, m.kappa1));
    const double e2 = m.lambda12 * std::sin(x1 - m.mu1);
    x2 = sample_von_mises_one(rng, std::hypot(m.kappa2, e2), m.mu2 + std::atan2(e2, m.kappa2));
  };
  for (std::size_t i = 0; i < cfg.burn_in; ++i) step();
  std::vector<Torus::Point> out;
  out.reserve(n);
  while (out.size() < n) {
    for (std::size_t t = 0; t < thin; ++t) step();
    out.emplace_back(x1, x2);
  }
  return out;
}

// Reference samplers keyed on the model type, used for the zeroth-order test.

inline std::vector<SO3Euler::Point> sample_from(const Uniform<SO3Euler>&, RngStream& rng, std::size_t n) {
  return sample_uniform_so3(rng, n);
}
inline std::vector<SO3Euler::Point> sample_from(const FisherSO3& q, RngStream& rng, std::size_t n) {
  return sample_fisher_so3(rng, q.F, n).points;
}
inline std::vector<Circle::Point> sample_from(const VonMises& q, RngStream& rng, std::size_t n) {
  std::vector<Circle::Point> out;
  for (double v : sample_von_mises(rng, q.kappa, q.mu, n)) out.push_back(Circle::Point(v));
  return out;
}
inline std::vector<Circle::Point> sample_from(const Uniform<Circle>&, RngStream& rng, std::size_t n) {
  return sample_from(VonMises{}, rng, n);
}
inline std::vector<Torus::Point> sample_from(const BivariateVonMises& q, RngStream& rng, std::size_t n) {
  return sample_bivariate_vm(rng, q, n);
}
inline std::vector<Torus::Point> sample_from(const Uniform<Torus>&, RngStream& rng, std::size_t n) {
  std::vector<Torus::Point> out(n);
  for (auto& p : out) p = Torus::Point(kTwoPi * rng.uniform(), kTwoPi * rng.uniform());
  return out;
}

}  // namespace mksd
