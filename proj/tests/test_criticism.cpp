#include <gtest/gtest.h>

#include <chrono>
#include <random>

#include "mksd/criticism.hpp"
#include "mksd/sampling.hpp"
#include "support.hpp"

using namespace mksd;

namespace {

std::vector<Torus::Point> random_torus(int n, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> u(0.0, oracle::kTwoPi);
  std::vector<Torus::Point> out(n);
  for (auto& p : out) p = Torus::point(u(eng), u(eng));
  return out;
}

}  // namespace

TEST(Mfssd, ZeroForUniformSinglePointAtLocation) {
  const std::vector<Circle::Point> data{Circle::point(1.2)};
  const TestLocations<Circle> V{{Circle::point(1.2)}};
  EXPECT_NEAR(mfssd<Uniform<Circle>>(data, Uniform<Circle>{}, von_mises_kernel(1.0), V), 0.0, 1e-15);
}

TEST(Mfssd, EqualsMeanSquaredWitness) {
  const auto q = wind_direction_fit();
  const auto k = product_von_mises_kernel(0.8, 1.6);
  const auto data = random_torus(50, 1);
  const TestLocations<Torus> V{random_torus(4, 2)};
  double direct = 0.0;
  for (const auto& v : V.V) direct += witness_at(q, k, std::span<const Torus::Point>(data), v).squaredNorm();
  direct /= 8.0;
  const double m = mfssd<BivariateVonMises>(data, q, k, V);
  EXPECT_NEAR(m, direct, 1e-12);
  EXPECT_GE(m, 0.0);
}

TEST(MfssdVariance, MatchesDeltaMethodBruteForce) {
  const auto q = wind_direction_fit();
  const auto k = product_von_mises_kernel(0.8, 1.6);
  const auto data = random_torus(30, 3);
  const TestLocations<Torus> V{random_torus(3, 4)};
  const auto t = feature_matrix(WitnessEvaluator<BivariateVonMises>(q, k, std::span<const Torus::Point>(data)),
                                std::span<const Torus::Point>(V.V));
  ASSERT_EQ(t.cols(), 6);
  const Eigen::VectorXd mu = t.colwise().mean().transpose();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(6, 6);
  for (int i = 0; i < 30; ++i) {
    const Eigen::VectorXd d = t.row(i).transpose() - mu;
    cov += d * d.transpose();
  }
  cov /= 29.0;
  const double expect = 4.0 / 36.0 * mu.dot(cov * mu);
  EXPECT_NEAR(mfssd_variance<BivariateVonMises>(data, q, k, V), expect, 1e-12 * std::max(1.0, expect));
}

TEST(MfssdVariance, IdenticalFeaturesOrZeroMean) {
  Eigen::MatrixXd same = Eigen::MatrixXd::Ones(5, 4);
  EXPECT_NEAR(mfssd_variance_from_features(same), 0.0, 1e-15);
  Eigen::MatrixXd centered(2, 2);
  centered << 1, -2, -1, 2;
  EXPECT_NEAR(mfssd_variance_from_features(centered), 0.0, 1e-15);
  EXPECT_THROW(mfssd_variance_from_features(Eigen::MatrixXd::Ones(1, 2)), TooFewSamples);
}

TEST(MfssdObjective, InvariantToLocationOrder) {
  const auto q = wind_direction_fit().factorized();
  const auto k = product_von_mises_kernel(1.0, 1.0);
  const auto data = random_torus(40, 5);
  TestLocations<Torus> V{random_torus(5, 6)};
  const double a = mfssd_objective<BivariateVonMises>(data, q, k, V);
  std::reverse(V.V.begin(), V.V.end());
  EXPECT_NEAR(mfssd_objective<BivariateVonMises>(data, q, k, V), a, 1e-12 * std::abs(a));
}

TEST(Mfssd, DecaysUnderNull) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RngStream rng(seed);
    std::vector<Circle::Point> data;
    for (double x : sample_von_mises(rng, 0.0, 0.0, 5000)) data.push_back(Circle::point(x));
    const TestLocations<Circle> V{{Circle::point(1.0), Circle::point(4.0)}};
    EXPECT_LT(mfssd<Uniform<Circle>>(data, Uniform<Circle>{}, von_mises_kernel(1.0), V), 1e-2);
  }
}

TEST(OptimizeLocations, SingleLocationBeatsLattice) {
  RngStream rng(7);
  const auto p = wind_direction_fit();
  const auto data = sample_bivariate_vm(rng, p, 182);
  const auto q = p.factorized();
  const auto k = ExpKernel<Torus>(Torus{}, median_heuristic<Torus>(data));
  RngStream orng(8);
  const auto V = optimize_locations<BivariateVonMises>(data, q, k, 1, orng);
  ASSERT_EQ(V.J(), 1u);
  const double best = mfssd_objective<BivariateVonMises>(data, q, k, V);
  double grid_max = -1.0;
  for (const auto& row : objective_lattice<BivariateVonMises>(data, q, k, 32)) grid_max = std::max(grid_max, row[2]);
  EXPECT_GE(best, grid_max - 1e-6);
  for (int i = 0; i < 2; ++i) {
    EXPECT_GE(V.V[0](i), 0.0);
    EXPECT_LT(V.V[0](i), kTwoPi);
  }
}

TEST(OptimizeLocations, DeterministicAndSeparated) {
  RngStream rng(9);
  const auto data = sample_bivariate_vm(rng, wind_direction_fit(), 100);
  const auto q = wind_direction_fit().factorized();
  const auto k = product_von_mises_kernel(1.0, 1.0);
  LocationOptimizerConfig cfg;
  cfg.starts = 2;
  RngStream a(10), b(10);
  const auto va = optimize_locations<BivariateVonMises>(data, q, k, 4, a, cfg);
  const auto vb = optimize_locations<BivariateVonMises>(data, q, k, 4, b, cfg);
  EXPECT_EQ(va.V, vb.V);
  for (std::size_t i = 0; i < va.J(); ++i)
    for (std::size_t j = i + 1; j < va.J(); ++j) EXPECT_GE(wrapped_distance<Torus>(va.V[i], va.V[j]), 1e-3);
}

TEST(SeparateDuplicates, JittersCollidingLocations) {
  std::vector<Torus::Point> V{Torus::point(1.0, 1.0), Torus::point(1.0, 1.0), Torus::point(1.0 + 1e-4, 1.0)};
  RngStream rng(11);
  separate_duplicates(Torus{}, V, rng);
  for (std::size_t i = 0; i < V.size(); ++i)
    for (std::size_t j = i + 1; j < V.size(); ++j) EXPECT_GE(wrapped_distance<Torus>(V[i], V[j]), 1e-3);
  EXPECT_EQ(V[0], Torus::point(1.0, 1.0));
}

TEST(Criticize, SortedLocationsAndInvariants) {
  RngStream rng(12);
  const auto data = sample_bivariate_vm(rng, wind_direction_fit(), 120);
  CriticismConfig cfg;
  cfg.J = 3;
  cfg.bootstrap = 300;
  cfg.seed = 4;
  cfg.optimizer.starts = 2;
  const auto r = criticize<BivariateVonMises>(data, wind_direction_fit().factorized(), product_von_mises_kernel(1.0, 1.0), cfg);
  ASSERT_EQ(r.locations.J(), 3u);
  EXPECT_TRUE(std::is_sorted(r.location_objective.rbegin(), r.location_objective.rend()));
  EXPECT_EQ(r.p_value, bootstrap_p_value(r.statistic, r.null_samples));
  EXPECT_EQ(r.reject, r.statistic > r.quantile);
  EXPECT_EQ(r.train.size() + r.test.size(), 120u);
}

TEST(Criticize, NullPValuesRoughlyUniform) {
  const auto q = wind_direction_fit().factorized();
  std::vector<double> p;
  for (std::uint64_t r = 0; r < 100; ++r) {
    RngStream rng = RngStream(13).derive(r);
    const auto data = sample_bivariate_vm(rng, q, 80);
    CriticismConfig cfg;
    cfg.J = 2;
    cfg.bootstrap = 200;
    cfg.seed = r;
    cfg.optimizer.starts = 1;
    cfg.optimizer.polish_restarts = 0;
    p.push_back(criticize<BivariateVonMises>(data, q, product_von_mises_kernel(1.0, 1.0), cfg).p_value);
  }
  EXPECT_LT(oracle::ks_uniform(p), 0.2);
}

TEST(Mfssd, LinearTimeScaling) {
  const auto q = wind_direction_fit();
  const auto k = product_von_mises_kernel(1.0, 1.0);
  const TestLocations<Torus> V{random_torus(10, 14)};
  auto timed = [&](int n) {
    const auto data = random_torus(n, 15);
    double best = 1e9;
    for (int rep = 0; rep < 7; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      volatile double m = mfssd<BivariateVonMises>(data, q, k, V);
      (void)m;
      best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
  };
  const double ratio = timed(20000) / timed(10000);
  EXPECT_GE(ratio, 1.6);
  EXPECT_LE(ratio, 2.6);
}
