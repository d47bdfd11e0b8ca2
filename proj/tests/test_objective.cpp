#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "savo/errors.hpp"
#include "savo/objective.hpp"

using namespace savo;
using se3::Matrix6d;
using se3::Pose;
using se3::Twist;
using se3::Vector6d;

namespace {

Twist random_twist(std::mt19937_64& rng, double max_angle, double max_t) {
  std::normal_distribution<double> un(0.0, 1.0);
  std::uniform_real_distribution<double> ua(0.0, max_angle);
  std::uniform_real_distribution<double> ut(-max_t, max_t);
  Eigen::Vector3d axis(un(rng), un(rng), un(rng));
  if (axis.norm() < 1e-12) axis = Eigen::Vector3d::UnitZ();
  axis.normalize();
  return Twist(Eigen::Vector3d(ut(rng), ut(rng), ut(rng)),
               Eigen::Vector3d(axis * ua(rng)));
}

CovarianceMatrix random_spd_cov(std::mt19937_64& rng) {
  std::normal_distribution<double> un(0.0, 1.0);
  Matrix6d a;
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c) a(r, c) = un(rng);
  Matrix6d sigma = a * a.transpose() + 0.1 * Matrix6d::Identity();
  return CovarianceMatrix::from_sigma(sigma, 1e-6);
}

}  // namespace

TEST_CASE("residual vanishes on the exact estimate") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    Twist xi = random_twist(rng, 1.5, 3.0);
    Pose target = se3::exp_map(xi);
    Twist g = residual(xi, target);
    CHECK(g.coeffs.norm() < 1e-12);
  }
}

TEST_CASE("residual against identity target is the twist itself") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    Twist xi = random_twist(rng, 1.0, 2.0);
    Twist g = residual(xi, Pose::identity());
    CHECK((g.coeffs - xi.coeffs).norm() < 1e-10);
  }
}

TEST_CASE("residual matches the series-exponential oracle") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    Twist xi = random_twist(rng, 1.0, 2.0);
    Twist other = random_twist(rng, 1.0, 2.0);
    Pose target = se3::exp_map(other);

    Twist g = residual(xi, target);
    Eigen::Matrix4d expected =
        oracle::expm_series(xi.coeffs) * target.matrix.inverse();
    CHECK((se3::exp_map(g).matrix - expected).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("loss closed forms") {
  CovarianceMatrix unit = CovarianceMatrix::identity();

  std::mt19937_64 rng(9);
  Twist xi = random_twist(rng, 1.2, 2.0);
  LossValue exact = loss(xi, se3::exp_map(xi), unit);
  CHECK(exact.value >= 0.0);
  CHECK(exact.value < 1e-18);

  Vector6d g;
  g << 0.1, 0, 0, 0, 0, 0;
  LossValue simple = loss(Twist(g), Pose::identity(), unit);
  CHECK(simple.value == doctest::Approx(0.005).epsilon(1e-9));
}

TEST_CASE("loss is positive exactly when the estimate is off") {
  std::mt19937_64 rng(11);
  CovarianceMatrix unit = CovarianceMatrix::identity();
  for (int i = 0; i < 1000; ++i) {
    Twist xi = random_twist(rng, 1.2, 3.0);
    Pose target = se3::exp_map(xi);
    CHECK(loss(xi, target, unit).value < 1e-18);

    Twist off = xi;
    off.coeffs(i % 6) += 1e-2;
    CHECK(loss(off, target, unit).value > 1e-8);
  }
}

TEST_CASE("loss gradient matches central differences") {
  std::mt19937_64 rng(13);
  double worst = 0.0;
  for (int trial = 0; trial < 120; ++trial) {
    Twist xi = random_twist(rng, 0.9, 2.0);
    Pose target = se3::exp_map(random_twist(rng, 0.9, 2.0));
    CovarianceMatrix cov =
        (trial % 3 == 0) ? CovarianceMatrix::identity() : random_spd_cov(rng);

    Vector6d analytic = loss_gradient(xi, target, cov);
    auto f = [&](const Eigen::VectorXd& x) {
      return loss(Twist(Vector6d(x)), target, cov).value;
    };
    Eigen::VectorXd numeric =
        oracle::central_difference(f, xi.coeffs, 1e-6);
    worst = std::max(worst,
                     oracle::max_relative_error(analytic, numeric, 1e-6));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("identical samples give zero variance and a pure regularizer") {
  Twist t(Vector6d::Ones());
  std::vector<Twist> samples(5, t);
  CovarianceMatrix cov = fit_covariance(samples, 0.5);
  CHECK(cov.sigma.cwiseAbs().maxCoeff() == 0.0);
  CHECK((cov.sigma_inv - 2.0 * Matrix6d::Identity()).cwiseAbs().maxCoeff() <
        1e-12);
  CHECK((cov.mean_twist.coeffs - t.coeffs).norm() < 1e-15);
}

TEST_CASE("two-sample covariance by hand") {
  Vector6d a = Vector6d::Zero();
  Vector6d b = Vector6d::Zero();
  b(0) = 2.0;
  CovarianceMatrix cov = fit_covariance({Twist(a), Twist(b)}, 1e-9);
  CHECK(cov.sigma(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c)
      if (r != 0 || c != 0) CHECK(cov.sigma(r, c) == 0.0);
  CHECK(cov.mean_twist.coeffs(0) == doctest::Approx(1.0));
}

TEST_CASE("covariance matches the brute-force two-pass oracle") {
  std::mt19937_64 rng(17);
  std::vector<Twist> samples;
  std::vector<Vector6d> raw;
  for (int i = 0; i < 200; ++i) {
    Twist t = random_twist(rng, 1.0, 4.0);
    samples.push_back(t);
    raw.push_back(t.coeffs);
  }
  CovarianceMatrix cov = fit_covariance(samples);
  Eigen::MatrixXd expected = oracle::brute_force_covariance(raw);
  CHECK((cov.sigma - expected).cwiseAbs().maxCoeff() < 1e-10);

  // auto regularizer rule
  CHECK(cov.epsilon ==
        doctest::Approx(1e-6 * std::max(cov.sigma.trace() / 6.0, 1e-12))
            .epsilon(1e-12));
  cov.validate();
}

TEST_CASE("covariance fit is exactly order-invariant symmetric and PSD") {
  std::mt19937_64 rng(19);
  std::vector<Twist> samples;
  for (int i = 0; i < 64; ++i) samples.push_back(random_twist(rng, 1.0, 2.0));

  CovarianceMatrix first = fit_covariance(samples);
  std::shuffle(samples.begin(), samples.end(), rng);
  CovarianceMatrix second = fit_covariance(samples);

  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c) CHECK(first.sigma(r, c) == second.sigma(r, c));

  CHECK((first.sigma - first.sigma.transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Matrix6d> eig(first.sigma);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
}

TEST_CASE("covariance fit rejects insufficient data") {
  CHECK_THROWS_AS(fit_covariance({}), Error);
  CHECK_THROWS_AS(fit_covariance({Twist()}), Error);
  try {
    fit_covariance({Twist()});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InsufficientData);
  }
}

TEST_CASE("covariance artifact round trips exactly") {
  std::mt19937_64 rng(23);
  std::vector<Twist> samples;
  for (int i = 0; i < 50; ++i) samples.push_back(random_twist(rng, 1.0, 3.0));
  CovarianceMatrix cov = fit_covariance(samples);

  CovarianceMatrix back = CovarianceMatrix::deserialize(cov.serialize());
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c) CHECK(back.sigma(r, c) == cov.sigma(r, c));
  CHECK(back.epsilon == cov.epsilon);
  CHECK((back.mean_twist.coeffs - cov.mean_twist.coeffs).norm() == 0.0);
  back.validate();

  CHECK_THROWS_AS(CovarianceMatrix::deserialize("epsilon nope"), Error);
  CHECK_THROWS_AS(CovarianceMatrix::deserialize("sigma 1 2 3"), Error);
}

TEST_CASE("validation rejects a tampered inverse") {
  CovarianceMatrix cov = CovarianceMatrix::identity();
  cov.validate();
  cov.sigma_inv(0, 0) = 2.0;
  CHECK_THROWS_AS(cov.validate(), Error);
}
