#include <gtest/gtest.h>

#include "mksd/sampling.hpp"
#include "support.hpp"

using namespace mksd;

namespace {

struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

Moments moments(const std::vector<double>& v) {
  double m = 0.0, s = 0.0;
  for (double x : v) m += x;
  m /= double(v.size());
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / double(v.size() - 1) / double(v.size()))};
}

// E[f(X)] under exp(tr(FᵀX)) by midpoint quadrature over Euler angles with the sin θ Haar weight.
double fisher_expectation(const Eigen::Matrix3d& F, const std::function<double(const Eigen::Matrix3d&)>& f, int n = 48) {
  double num = 0.0, den = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        const double phi = oracle::kTwoPi * (a + 0.5) / n;
        const double theta = std::numbers::pi * (b + 0.5) / n;
        const double psi = oracle::kTwoPi * (c + 0.5) / n;
        const auto x = oracle::zyz(phi, theta, psi);
        const double w = std::exp((F.array() * x.array()).sum()) * std::sin(theta);
        num += w * f(x);
        den += w;
      }
  return num / den;
}

}  // namespace

TEST(Haar, SamplesAreRotationsAwayFromSingularSet) {
  RngStream rng(1);
  for (const auto& x : sample_uniform_so3(rng, 2000)) {
    EXPECT_LT(rotation_defect(SO3Euler::euler_to_matrix(x)), 1e-10);
    EXPECT_LT(std::abs(std::cos(x(1))), 1.0 - 1e-12);
    EXPECT_GE(x(0), 0.0);
    EXPECT_LT(x(0), kTwoPi);
  }
}

TEST(Haar, TraceHasMeanZero) {
  RngStream rng(2);
  std::vector<double> tr;
  for (const auto& x : sample_uniform_so3(rng, 10000)) tr.push_back(SO3Euler::euler_to_matrix(x).trace());
  const auto m = moments(tr);
  EXPECT_LT(std::abs(m.mean), 3 * m.se);
}

TEST(Haar, PolarAngleHasSineDensity) {
  RngStream rng(3);
  const int bins = 20, n = 20000;
  std::vector<int> counts(bins, 0);
  for (const auto& x : sample_uniform_so3(rng, n)) {
    counts[std::min(bins - 1, int(x(1) / std::numbers::pi * bins))]++;
  }
  double chi2 = 0.0;
  for (int b = 0; b < bins; ++b) {
    // ∫ sinθ/2 over the bin
    const double lo = std::numbers::pi * b / bins, hi = std::numbers::pi * (b + 1) / bins;
    const double expect = n * 0.5 * (std::cos(lo) - std::cos(hi));
    chi2 += (counts[b] - expect) * (counts[b] - expect) / expect;
  }
  EXPECT_LT(chi2, oracle::chi2_critical(bins - 1, oracle::kZ99));
}

TEST(ExpTrace, ZeroConcentrationAcceptsEverything) {
  RngStream rng(4);
  const auto batch = sample_exp_trace_so3(rng, 0.0, 500);
  EXPECT_EQ(batch.acceptance_rate, 1.0);
  EXPECT_EQ(batch.points.size(), 500u);
  EXPECT_FALSE(batch.low_acceptance());
}

TEST(ExpTrace, TraceMeanMatchesQuadrature) {
  const double kappa = 0.35;
  // trace depends only on the rotation angle ω, whose Haar density is (1 − cos ω)/π
  const int m = 20000;
  double num = 0.0, den = 0.0;
  for (int i = 0; i < m; ++i) {
    const double w = std::numbers::pi * (i + 0.5) / m;
    const double t = 1.0 + 2.0 * std::cos(w);
    const double dens = std::exp(kappa * t) * (1.0 - std::cos(w));
    num += t * dens;
    den += dens;
  }
  RngStream rng(5);
  std::vector<double> tr;
  for (const auto& x : sample_exp_trace_so3(rng, kappa, 10000).points) tr.push_back(SO3Euler::euler_to_matrix(x).trace());
  const auto mo = moments(tr);
  EXPECT_LT(std::abs(mo.mean - num / den), 3 * mo.se);
}

TEST(Fisher, PerturbedTraceMomentsMatchQuadrature) {
  const Eigen::Matrix3d F = fisher_perturbation(0.2);
  auto stat = [&](const Eigen::Matrix3d& x) { return (F.array() * x.array()).sum(); };
  const double expect = fisher_expectation(F, stat);
  const double expect2 = fisher_expectation(F, [&](const Eigen::Matrix3d& x) { return stat(x) * stat(x); });
  RngStream rng(6);
  std::vector<double> v, v2;
  for (const auto& x : sample_fisher_so3(rng, F, 10000).points) {
    const double s = stat(SO3Euler::euler_to_matrix(x));
    v.push_back(s);
    v2.push_back(s * s);
  }
  const auto m1 = moments(v), m2 = moments(v2);
  EXPECT_LT(std::abs(m1.mean - expect), 3 * m1.se);
  EXPECT_LT(std::abs(m2.mean - expect2), 3 * m2.se);
}

TEST(Fisher, ZeroParameterIsUniform) {
  RngStream rng(7);
  const auto batch = sample_fisher_so3(rng, Eigen::Matrix3d::Zero(), 100);
  EXPECT_EQ(batch.acceptance_rate, 1.0);
}

TEST(Fisher, VectorcardiogramFitAcceptanceReported) {
  RngStream rng(8);
  const auto batch = sample_fisher_so3(rng, vectorcardiogram_fisher_fit(), 50);
  EXPECT_EQ(batch.points.size(), 50u);
  EXPECT_GT(batch.acceptance_rate, 0.0);
  EXPECT_LE(batch.acceptance_rate, 1.0);
}

TEST(VonMisesSampler, ZeroConcentrationIsUniform) {
  RngStream rng(9);
  auto v = sample_von_mises(rng, 0.0, 1.0, 10000);
  for (double& x : v) {
    ASSERT_GE(x, 0.0);
    ASSERT_LT(x, kTwoPi);
    x /= kTwoPi;
  }
  EXPECT_LT(oracle::ks_uniform(v), 1.63 / std::sqrt(10000.0));
}

TEST(VonMisesSampler, MeanDirectionAndResultantLength) {
  RngStream rng(10);
  const double kappa = 2.0, mu = 1.0;
  const auto v = sample_von_mises(rng, kappa, mu, 10000);
  std::vector<double> c, s;
  for (double x : v) {
    ASSERT_GE(x, 0.0);
    ASSERT_LT(x, kTwoPi);
    c.push_back(std::cos(x - mu));
    s.push_back(std::sin(x - mu));
  }
  const auto pdf = oracle::von_mises_pdf(kappa, mu);
  const double rbar = oracle::trapezoid_circle([&](double x) { return std::cos(x - mu) * pdf(x); }, 4096);
  const auto mc = moments(c), ms = moments(s);
  EXPECT_LT(std::abs(ms.mean), 3 * ms.se);
  EXPECT_LT(std::abs(mc.mean - rbar), 3 * mc.se);
}

TEST(BivariateSampler, FactorizedHasNoCorrelation) {
  RngStream rng(11);
  auto q = wind_direction_fit().factorized();
  std::vector<double> prod;
  for (const auto& x : sample_bivariate_vm(rng, q, 10000)) {
    prod.push_back(std::sin(x(0) - q.mu1) * std::sin(x(1) - q.mu2));
  }
  const auto m = moments(prod);
  EXPECT_LT(std::abs(m.mean), 2.576 * m.se);
}

TEST(BivariateSampler, HistogramMatchesQuadrature) {
  const auto q = wind_direction_fit();
  const int g = 16, sub = 16, n = 20000;
  std::vector<double> cell(g * g, 0.0);
  double total = 0.0;
  for (int a = 0; a < g * sub; ++a)
    for (int b = 0; b < g * sub; ++b) {
      const double x1 = oracle::kTwoPi * (a + 0.5) / (g * sub), x2 = oracle::kTwoPi * (b + 0.5) / (g * sub);
      const double w = std::exp(q.log_unnorm(Torus::point(x1, x2)));
      cell[(a / sub) * g + b / sub] += w;
      total += w;
    }
  RngStream rng(12);
  std::vector<int> counts(g * g, 0);
  for (const auto& x : sample_bivariate_vm(rng, q, n)) {
    ASSERT_GE(x(0), 0.0);
    ASSERT_LT(x(1), kTwoPi);
    counts[std::min(g - 1, int(x(0) / kTwoPi * g)) * g + std::min(g - 1, int(x(1) / kTwoPi * g))]++;
  }
  double chi2 = 0.0;
  for (int c = 0; c < g * g; ++c) {
    const double e = n * cell[c] / total;
    chi2 += (counts[c] - e) * (counts[c] - e) / e;
  }
  EXPECT_LT(chi2, oracle::chi2_critical(g * g - 1, oracle::kZ99));
}

TEST(Reproducibility, SameStreamSameSamples) {
  RngStream a(13), b(13);
  EXPECT_EQ(sample_uniform_so3(a, 20), sample_uniform_so3(b, 20));
  EXPECT_EQ(sample_bivariate_vm(a, wind_direction_fit(), 20), sample_bivariate_vm(b, wind_direction_fit(), 20));
  RngStream c1 = RngStream(13).derive(1), c2 = RngStream(13).derive(2);
  EXPECT_NE(sample_uniform_so3(c1, 5), sample_uniform_so3(c2, 5));
}
