#include <gtest/gtest.h>

#include <random>

#include "mksd/manifold.hpp"
#include "support.hpp"

using namespace mksd;

namespace {

std::vector<SO3Euler::Point> random_interior_points(int n, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> ang(0.0, kTwoPi), th(0.05, std::numbers::pi - 0.05);
  std::vector<SO3Euler::Point> out;
  for (int i = 0; i < n; ++i) out.emplace_back(ang(eng), th(eng), ang(eng));
  return out;
}

}  // namespace

TEST(WrapAngle, ReducesIntoHalfOpenInterval) {
  EXPECT_NEAR(wrap_angle(kTwoPi + 0.5), 0.5, 1e-15);
  EXPECT_NEAR(wrap_angle(-0.1), kTwoPi - 0.1, 1e-15);
  EXPECT_EQ(wrap_angle(kTwoPi), 0.0);
  EXPECT_LT(wrap_angle(-1e-18), kTwoPi);
}

TEST(Circle, FlatChart) {
  Circle c;
  EXPECT_EQ(c.metric_tensor(Circle::point(1.0))(0, 0), 1.0);
  EXPECT_EQ(c.volume_element(Circle::point(2.0)), 1.0);
  EXPECT_EQ(c.wrap(Circle::Point(kTwoPi + 0.5))(0), c.wrap(Circle::Point(0.5))(0));
}

TEST(Torus, FlatChartAndWrap) {
  Torus t;
  EXPECT_TRUE(t.metric_tensor(Torus::point(1.0, 2.0)).isIdentity());
  EXPECT_EQ(t.volume_element(Torus::point(1.0, 2.0)), 1.0);
  EXPECT_TRUE(t.grad_log_volume(Torus::point(1.0, 2.0)).isZero());
  const auto w = t.wrap(Torus::Point(-0.1, 7.0));
  EXPECT_NEAR(w(0), kTwoPi - 0.1, 1e-14);
  EXPECT_NEAR(w(1), 7.0 - kTwoPi, 1e-14);
}

TEST(SO3Euler, EulerToMatrixMatchesAxisAngleProduct) {
  for (const auto& x : random_interior_points(20, 1)) {
    EXPECT_LT((SO3Euler::euler_to_matrix(x) - oracle::zyz(x(0), x(1), x(2))).norm(), 1e-13);
  }
  EXPECT_TRUE(SO3Euler::euler_to_matrix(SO3Euler::point(0, 0, 0)).isIdentity(1e-15));
  const auto deg = SO3Euler::euler_to_matrix(SO3Euler::point(0.4, 0.0, 0.9));
  EXPECT_LT((deg - euler::rot_z(1.3)).norm(), 1e-14);
}

TEST(SO3Euler, EulerToMatrixIsRotation) {
  for (const auto& x : random_interior_points(50, 2)) {
    EXPECT_LT(rotation_defect(SO3Euler::euler_to_matrix(x)), 1e-10);
  }
}

TEST(SO3Euler, MetricAtFixedPoints) {
  SO3Euler so3;
  const auto g = so3.metric_tensor(SO3Euler::point(0.3, 1.0, 0.7));
  Eigen::Matrix3d expect;
  expect << 2, 0, 2 * std::cos(1.0), 0, 2, 0, 2 * std::cos(1.0), 0, 2;
  EXPECT_LT((g - expect).norm(), 1e-14);
  const auto g2 = so3.metric_tensor(SO3Euler::point(0.3, std::numbers::pi / 2, 0.7));
  EXPECT_LT((g2 - 2.0 * Eigen::Matrix3d::Identity()).norm(), 1e-14);
}

TEST(SO3Euler, MetricMatchesFiniteDifferencePullback) {
  SO3Euler so3;
  for (const auto& x : random_interior_points(30, 3)) {
    Eigen::Matrix3d fd;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        fd(i, j) = (oracle::zyz_partial(x, i).transpose() * oracle::zyz_partial(x, j)).trace();
    EXPECT_LT((so3.metric_tensor(x) - fd).cwiseAbs().maxCoeff(), 1e-5);
    EXPECT_LT((so3.inverse_metric(x) * so3.metric_tensor(x) - Eigen::Matrix3d::Identity()).norm(), 1e-10);
  }
}

TEST(SO3Euler, VolumeElement) {
  SO3Euler so3;
  for (const auto& x : random_interior_points(100, 4)) {
    const double j = so3.volume_element(x);
    EXPECT_NEAR(j, 2.0 * std::numbers::sqrt2 * std::sin(x(1)), 1e-8);
    EXPECT_NEAR(j, std::sqrt(so3.metric_tensor(x).determinant()), 1e-8);
  }
}

TEST(SO3Euler, GradLogVolumeMatchesFiniteDifferences) {
  SO3Euler so3;
  const std::function<double(const SO3Euler::Point&)> logj = [&](const SO3Euler::Point& p) {
    return std::log(so3.volume_element(p));
  };
  for (const auto& x : random_interior_points(30, 5)) {
    const auto g = so3.grad_log_volume(x);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(g(i), oracle::central_diff(logj, x, i, 1e-6), 1e-6);
  }
  const auto at_half_pi = so3.grad_log_volume(SO3Euler::point(0.1, std::numbers::pi / 2, 0.2));
  EXPECT_NEAR(at_half_pi.norm(), 0.0, 1e-15);
  EXPECT_NEAR(so3.grad_log_volume(SO3Euler::point(0.1, 1.0, 0.2))(1), 1.0 / std::tan(1.0), 1e-15);
}

TEST(SO3Euler, MatrixToEulerRoundTrip) {
  for (const auto& x : random_interior_points(100, 6)) {
    const auto back = SO3Euler::matrix_to_euler(SO3Euler::euler_to_matrix(x));
    EXPECT_LT((SO3Euler::euler_to_matrix(back) - SO3Euler::euler_to_matrix(x)).norm(), 1e-8);
    EXPECT_LT((back - x).norm(), 1e-8);
  }
  const auto r = SO3Euler::matrix_to_euler(SO3Euler::euler_to_matrix(SO3Euler::point(5.0, 2.5, 0.1)));
  EXPECT_NEAR(r(0), 5.0, 1e-10);
  EXPECT_NEAR(r(1), 2.5, 1e-10);
  EXPECT_NEAR(r(2), 0.1, 1e-10);
}

TEST(SO3Euler, IdentityIsGimbalLock) {
  EXPECT_THROW(SO3Euler::matrix_to_euler(Eigen::Matrix3d::Identity()), GimbalLock);
}

TEST(SO3Euler, SingularPointsRaise) {
  SO3Euler so3;
  EXPECT_THROW(so3.metric_tensor(SO3Euler::point(0.1, 0.0, 0.2)), SingularChartPoint);
  EXPECT_THROW(so3.volume_element(SO3Euler::point(0.1, std::numbers::pi, 0.2)), SingularChartPoint);
  EXPECT_THROW(so3.grad_log_volume(SO3Euler::point(0.1, 1e-13, 0.2)), SingularChartPoint);
}

TEST(SO3Euler, WrapNegativeTheta) {
  SO3Euler so3;
  const SO3Euler::Point raw(0.2, -0.4, 0.1);
  const auto w = so3.wrap(raw);
  EXPECT_NEAR(w(0), 0.2 + std::numbers::pi, 1e-14);
  EXPECT_NEAR(w(1), 0.4, 1e-14);
  EXPECT_NEAR(w(2), 0.1 + std::numbers::pi, 1e-14);
  EXPECT_LT((SO3Euler::euler_to_matrix(w) - SO3Euler::euler_to_matrix(raw)).norm(), 1e-13);
}

TEST(SO3Euler, JetMatchesFiniteDifferences) {
  SO3Euler so3;
  auto flat = [](const Eigen::Matrix3d& m) { return Eigen::Map<const Eigen::Matrix<double, 9, 1>>(m.data()).eval(); };
  for (const auto& x : random_interior_points(10, 7)) {
    const auto j = so3.jet(x);
    EXPECT_LT((j.slot[0] - flat(oracle::zyz(x(0), x(1), x(2)))).norm(), 1e-13);
    for (int i = 0; i < 3; ++i) {
      EXPECT_LT((j.slot[SO3Euler::Jet::first(i)] - flat(oracle::zyz_partial(x, i))).norm(), 1e-8);
      for (int k = 0; k < 3; ++k) {
        const double h = 1e-4;
        Eigen::Vector3d xp = x, xm = x;
        xp(k) += h;
        xm(k) -= h;
        const Eigen::Matrix3d d2 = (oracle::zyz_partial(xp, i) - oracle::zyz_partial(xm, i)) / (2 * h);
        EXPECT_LT((j.slot[SO3Euler::Jet::second(i, k)] - flat(d2)).norm(), 1e-5);
      }
    }
  }
}

TEST(RotationDefect, DetectsNonOrthogonal) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  EXPECT_LT(rotation_defect(m), 1e-15);
  m(0, 1) = 1e-3;
  EXPECT_GT(rotation_defect(m), 1e-4);
  EXPECT_GT(rotation_defect(-Eigen::Matrix3d::Identity()), 1.0);
}
