#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "oracles.hpp"
#include "savo/errors.hpp"
#include "savo/se3.hpp"

using namespace savo;
using se3::Pose;
using se3::Twist;
using se3::Vector6d;

namespace {

Twist random_twist(std::mt19937_64& rng, double max_angle) {
  std::uniform_real_distribution<double> uv(-5.0, 5.0);
  std::uniform_real_distribution<double> ua(0.0, max_angle);
  std::normal_distribution<double> un(0.0, 1.0);
  Eigen::Vector3d axis(un(rng), un(rng), un(rng));
  if (axis.norm() < 1e-12) axis = Eigen::Vector3d::UnitX();
  axis.normalize();
  Eigen::Vector3d v(uv(rng), uv(rng), uv(rng));
  return Twist(v, Eigen::Vector3d(axis * ua(rng)));
}

}  // namespace

TEST_CASE("exp_map identity and closed-form cases") {
  CHECK(se3::exp_map(Twist()).matrix.isApprox(Eigen::Matrix4d::Identity()));

  Vector6d pure_t;
  pure_t << 1, 2, 3, 0, 0, 0;
  Pose p = se3::exp_map(Twist(pure_t));
  CHECK(p.rotation().isApprox(Eigen::Matrix3d::Identity()));
  CHECK(p.translation().isApprox(Eigen::Vector3d(1, 2, 3)));

  Vector6d zrot;
  zrot << 0, 0, 0, 0, 0, M_PI / 2;
  Pose q = se3::exp_map(Twist(zrot));
  Eigen::Matrix3d expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  CHECK((q.rotation() - expected).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(q.translation().norm() < 1e-12);
}

TEST_CASE("exp_map matches series matrix exponential") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    Twist xi = random_twist(rng, 2.0);
    Eigen::Matrix4d ref = oracle::expm_series(xi.coeffs);
    Eigen::Matrix4d got = se3::exp_map(xi).matrix;
    CHECK((ref - got).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("exp_map output satisfies pose invariants") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    Pose p = se3::exp_map(random_twist(rng, 3.1));
    CHECK_NOTHROW(se3::validate(p));
  }
}

TEST_CASE("exp_map rejects non-finite input") {
  Vector6d bad = Vector6d::Zero();
  bad(2) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(se3::exp_map(Twist(bad)), Error);
}

TEST_CASE("log_map trivial cases") {
  CHECK(se3::log_map(Pose()).coeffs.norm() == 0.0);

  Pose pure_t(Eigen::Matrix3d::Identity(), Eigen::Vector3d(1, 2, 3));
  Vector6d expected;
  expected << 1, 2, 3, 0, 0, 0;
  CHECK((se3::log_map(pure_t).coeffs - expected).cwiseAbs().maxCoeff() <
        1e-14);
}

TEST_CASE("log_map round trips below 0.9 pi") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 1000; ++i) {
    Twist xi = random_twist(rng, 0.9 * M_PI);
    Twist back = se3::log_map(se3::exp_map(xi));
    CHECK((back.coeffs - xi.coeffs).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("exp of log round trips on poses") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 200; ++i) {
    Pose p = se3::exp_map(random_twist(rng, 3.0));
    Pose back = se3::exp_map(se3::log_map(p));
    CHECK((back.matrix - p.matrix).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("log_map rejects rotations at pi and invalid poses") {
  Eigen::Matrix3d half_turn;
  half_turn << 1, 0, 0, 0, -1, 0, 0, 0, -1;  // angle exactly pi about x
  CHECK_THROWS_AS(se3::log_map(Pose(half_turn, Eigen::Vector3d::Zero())),
                  Error);

  Pose bad;
  bad.matrix(0, 0) = 3.0;
  CHECK_THROWS_AS(se3::log_map(bad), Error);
}

TEST_CASE("compose, inverse and relative") {
  std::mt19937_64 rng(19);
  for (int i = 0; i < 100; ++i) {
    Pose a = se3::exp_map(random_twist(rng, 2.5));
    Pose b = se3::exp_map(random_twist(rng, 2.5));

    Eigen::Matrix4d prod = a.matrix * b.matrix;
    CHECK((se3::compose(a, b).matrix - prod).cwiseAbs().maxCoeff() < 1e-12);

    Pose ainv = se3::inverse(a);
    CHECK((se3::compose(a, ainv).matrix - Eigen::Matrix4d::Identity())
              .cwiseAbs()
              .maxCoeff() < 1e-10);
    CHECK((se3::relative(a, a).matrix - Eigen::Matrix4d::Identity())
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK((se3::inverse(ainv).matrix - a.matrix).cwiseAbs().maxCoeff() <
          1e-10);
  }
}

TEST_CASE("compose is associative") {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 100; ++i) {
    Pose a = se3::exp_map(random_twist(rng, 2.0));
    Pose b = se3::exp_map(random_twist(rng, 2.0));
    Pose c = se3::exp_map(random_twist(rng, 2.0));
    Eigen::Matrix4d lhs = se3::compose(se3::compose(a, b), c).matrix;
    Eigen::Matrix4d rhs = se3::compose(a, se3::compose(b, c)).matrix;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("adjoint matches conjugation") {
  std::mt19937_64 rng(29);
  for (int i = 0; i < 50; ++i) {
    Pose t = se3::exp_map(random_twist(rng, 2.0));
    Twist xi = random_twist(rng, 0.5);
    Eigen::Matrix4d lhs =
        se3::exp_map(Twist(Vector6d(se3::adjoint(t) * xi.coeffs))).matrix;
    Eigen::Matrix4d rhs =
        t.matrix * se3::exp_map(xi).matrix * se3::inverse(t).matrix;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("left and right jacobians match their defining expansions") {
  std::mt19937_64 rng(31);
  const double eps = 1e-6;
  for (int i = 0; i < 25; ++i) {
    Twist xi = random_twist(rng, 2.0);
    se3::Matrix6d jl = se3::left_jacobian(xi);
    se3::Matrix6d jr = se3::right_jacobian(xi);

    // Numeric Jacobians of d -> log(exp(xi+d) exp(xi)^-1) (left) and
    // d -> log(exp(xi)^-1 exp(xi+d)) (right).
    se3::Matrix6d jl_num, jr_num;
    for (int k = 0; k < 6; ++k) {
      Vector6d dp = Vector6d::Zero();
      dp(k) = eps;
      Pose pp = se3::exp_map(Twist(Vector6d(xi.coeffs + dp)));
      Pose pm = se3::exp_map(Twist(Vector6d(xi.coeffs - dp)));
      Pose base_inv = se3::inverse(se3::exp_map(xi));
      jl_num.col(k) = (se3::log_map(se3::compose(pp, base_inv)).coeffs -
                       se3::log_map(se3::compose(pm, base_inv)).coeffs) /
                      (2 * eps);
      jr_num.col(k) = (se3::log_map(se3::compose(base_inv, pp)).coeffs -
                       se3::log_map(se3::compose(base_inv, pm)).coeffs) /
                      (2 * eps);
    }
    CHECK((jl - jl_num).cwiseAbs().maxCoeff() < 1e-5);
    CHECK((jr - jr_num).cwiseAbs().maxCoeff() < 1e-5);

    CHECK((se3::left_jacobian_inv(xi) * jl - se3::Matrix6d::Identity())
              .cwiseAbs()
              .maxCoeff() < 1e-10);
    CHECK((se3::right_jacobian_inv(xi) * jr - se3::Matrix6d::Identity())
              .cwiseAbs()
              .maxCoeff() < 1e-10);
  }
}
