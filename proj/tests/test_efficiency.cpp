#include <gtest/gtest.h>

#include "mksd/efficiency.hpp"
#include "support.hpp"

using namespace mksd;

namespace {

// Under the uniform null with k = exp(η cos(x − y)), the Stein kernels depend
// on u = x − y only: h¹ = −f''(u), h² = f''''(u) with f(u) = exp(η cos u).
double h1_closed(double u, double eta) {
  const double s = std::sin(u);
  return (eta * std::cos(u) - eta * eta * s * s) * std::exp(eta * std::cos(u));
}
double h2_closed(double u, double eta) {
  const double s = std::sin(u), c = std::cos(u);
  const double e2 = eta * eta;
  return (e2 * e2 * s * s * s * s - 6 * e2 * eta * s * s * c - 7 * e2 * s * s + 3 * e2 + eta * c) *
         std::exp(eta * c);
}

}  // namespace

TEST(CircleWeights, NormalizedAndPeaked) {
  const auto w = circle_weights(VonMises{3.0, 1.0}, 512);
  EXPECT_NEAR(w.sum(), 1.0, 1e-14);
  Eigen::Index arg;
  w.maxCoeff(&arg);
  EXPECT_NEAR(kTwoPi * double(arg) / 512, 1.0, kTwoPi / 512);
}

TEST(BahadurSlope, VanishesWhenAlternativeIsNull) {
  const auto k = von_mises_kernel(1.0);
  for (int c : {0, 1, 2}) {
    EXPECT_NEAR(bahadur_slope(c, VonMises{0.0, 0.0}, Uniform<Circle>{}, k, 256).slope, 0.0, 1e-10);
    EXPECT_NEAR(bahadur_slope(c, VonMises{1.5, 0.3}, VonMises{1.5, 0.3}, k, 256).slope, 0.0, 1e-10);
  }
}

TEST(BahadurSlope, DenominatorsMatchClosedForm) {
  const double eta = 1.0;
  const auto e1 = oracle::trapezoid_circle([&](double u) { return h1_closed(u, eta) * h1_closed(u, eta); }, 4096) /
                  oracle::kTwoPi;
  const auto e2 = oracle::trapezoid_circle([&](double u) { return h2_closed(u, eta) * h2_closed(u, eta); }, 4096) /
                  oracle::kTwoPi;
  const auto k = von_mises_kernel(eta);
  const auto s1 = bahadur_slope(1, VonMises{2.0, 0.0}, Uniform<Circle>{}, k);
  const auto s2 = bahadur_slope(2, VonMises{2.0, 0.0}, Uniform<Circle>{}, k);
  EXPECT_NEAR(s1.denominator, std::sqrt(e1), 1e-10 * std::sqrt(e1));
  EXPECT_NEAR(s2.denominator, std::sqrt(e2), 1e-10 * std::sqrt(e2));
  EXPECT_GT(s1.denominator, 0.0);
  EXPECT_GT(s2.denominator, 0.0);
}

TEST(BahadurSlope, NumeratorMatchesClosedFormQuadrature) {
  // E_p[h¹] as a double integral of the closed form with a normalized von Mises p.
  const double kappa = 1.3, eta = 1.0;
  const auto pdf = oracle::von_mises_pdf(kappa, 0.0);
  const int m = 512;
  double acc = 0.0;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      const double x = oracle::kTwoPi * a / m, y = oracle::kTwoPi * b / m;
      acc += h1_closed(x - y, eta) * pdf(x) * pdf(y);
    }
  acc *= (oracle::kTwoPi / m) * (oracle::kTwoPi / m);
  const auto s = bahadur_slope(1, VonMises{kappa, 0.0}, Uniform<Circle>{}, von_mises_kernel(eta), 256);
  EXPECT_NEAR(s.numerator, acc, 1e-10);
  EXPECT_GT(s.slope, 0.0);
}

TEST(BahadurSlope, GridConvergence) {
  const auto k = von_mises_kernel(1.0);
  const VonMises p{3.0, 0.0};
  for (int c : {0, 1, 2}) {
    const double a = CircleStein<Uniform<Circle>>(c, Uniform<Circle>{}, k, 512).slope(p).slope;
    const double b = CircleStein<Uniform<Circle>>(c, Uniform<Circle>{}, k, 1024).slope(p).slope;
    EXPECT_LT(std::abs(a - b), 1e-8 * std::abs(b));
  }
}

TEST(BahadurSlope, UnderResolvedGridRaises) {
  EXPECT_THROW(bahadur_slope(1, VonMises{5000.0, 0.0}, Uniform<Circle>{}, von_mises_kernel(1.0), 256),
               QuadratureUnderResolved);
  EXPECT_THROW(bahadur_slope(1, VonMises{1.0, 0.0}, Uniform<Circle>{}, von_mises_kernel(1.0), 128), UsageError);
}

TEST(RelativeEfficiency, FactorizesIntoNumeratorAndDenominatorRatios) {
  const auto kap = kappa_grid(20.0, 8);
  const auto k = von_mises_kernel(1.0);
  const auto curve = relative_efficiency(1, 2, kap, Uniform<Circle>{}, k, 512);
  ASSERT_EQ(curve.size(), 8u);
  for (const auto& e : curve) {
    const double factor = (e.first.numerator / e.second.numerator) * (e.second.denominator / e.first.denominator);
    EXPECT_NEAR(e.efficiency, factor, 1e-8 * std::abs(factor));
    // the denominator ratio does not depend on κ
    EXPECT_NEAR(e.second.denominator / e.first.denominator,
                curve.front().second.denominator / curve.front().first.denominator, 1e-12);
  }
}

TEST(RelativeEfficiency, NumeratorRatioDecreasesInKappa) {
  const auto kap = kappa_grid(20.0, 40);
  const auto curve = relative_efficiency(1, 2, kap, Uniform<Circle>{}, von_mises_kernel(1.0), 512);
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const double prev = curve[i - 1].first.numerator / curve[i - 1].second.numerator;
    const double cur = curve[i].first.numerator / curve[i].second.numerator;
    EXPECT_LE(cur, prev + 1e-6);
  }
}

TEST(RelativeEfficiency, RejectsBadGrids) {
  const auto k = von_mises_kernel(1.0);
  EXPECT_THROW(relative_efficiency(1, 2, std::span<const double>(), Uniform<Circle>{}, k), EmptyGrid);
  const std::vector<double> bad{0.0, 1.0};
  EXPECT_THROW(relative_efficiency(1, 2, bad, Uniform<Circle>{}, k), UsageError);
  const auto g = kappa_grid(20.0, 40);
  EXPECT_EQ(g.size(), 40u);
  EXPECT_DOUBLE_EQ(g.front(), 0.5);
  EXPECT_DOUBLE_EQ(g.back(), 20.0);
}
