#include "savo/se3.hpp"

#include <Eigen/LU>
#include <cmath>

#include "savo/errors.hpp"

namespace savo::se3 {

namespace {

constexpr double kSmallAngle = 1e-8;
constexpr double kPiMargin = 1e-6;

// Q block of the SE(3) left Jacobian (coupling of translation and rotation),
// for xi = [rho, phi].
Eigen::Matrix3d se3_jacobian_q(const Eigen::Vector3d& rho,
                               const Eigen::Vector3d& phi) {
  const Eigen::Matrix3d rx = skew(rho);
  const Eigen::Matrix3d px = skew(phi);
  const double theta = phi.norm();

  double c1, c2, c3;  // series coefficients of the three bracket terms
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    c1 = 1.0 / 6.0 - t2 / 120.0;
    c2 = 1.0 / 24.0 - t2 / 720.0;
    c3 = 0.5 * (c2 - 3.0 * (-1.0 / 120.0 + t2 / 5040.0));
  } else {
    const double t2 = theta * theta;
    const double t3 = t2 * theta;
    const double t4 = t3 * theta;
    const double t5 = t4 * theta;
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    c1 = (theta - s) / t3;
    c2 = (1.0 - t2 / 2.0 - c) / t4;
    c3 = 0.5 * (c2 - 3.0 * (theta - s - t3 / 6.0) / t5);
  }

  const Eigen::Matrix3d pxrx = px * rx;
  const Eigen::Matrix3d rxpx = rx * px;
  const Eigen::Matrix3d pxrxpx = pxrx * px;

  Eigen::Matrix3d q = 0.5 * rx;
  q += c1 * (pxrx + rxpx + pxrxpx);
  q -= c2 * (px * pxrx + rxpx * px - 3.0 * pxrxpx);
  q -= c3 * (pxrxpx * px + px * pxrxpx);
  return q;
}

}  // namespace

void validate(const Pose& pose) {
  const Eigen::Matrix4d& m = pose.matrix;
  if (!m.allFinite()) throw_invalid("pose contains non-finite entries");
  if (m(3, 0) != 0.0 || m(3, 1) != 0.0 || m(3, 2) != 0.0 || m(3, 3) != 1.0)
    throw_invalid("pose bottom row is not (0,0,0,1)");
  const Eigen::Matrix3d r = pose.rotation();
  const double ortho =
      (r.transpose() * r - Eigen::Matrix3d::Identity()).norm();
  if (ortho > 1e-6) throw_invalid("pose rotation block is not orthonormal");
  const double det = r.determinant();
  if (std::abs(det - 1.0) > 1e-6)
    throw_invalid("pose rotation block determinant differs from 1");
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0.0, -v.z(), v.y(),  //
      v.z(), 0.0, -v.x(),   //
      -v.y(), v.x(), 0.0;
  return s;
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& w) {
  const double theta = w.norm();
  const Eigen::Matrix3d wx = skew(w);
  double a, b;  // sin(t)/t, (1-cos(t))/t^2
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    a = 1.0 - t2 / 6.0;
    b = 0.5 - t2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / (theta * theta);
  }
  return Eigen::Matrix3d::Identity() + a * wx + b * wx * wx;
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& rotation) {
  // sin(theta) * axis from the skew part, cos(theta) from the trace;
  // atan2 keeps the angle well conditioned near zero.
  Eigen::Vector3d u;
  u << rotation(2, 1) - rotation(1, 2), rotation(0, 2) - rotation(2, 0),
      rotation(1, 0) - rotation(0, 1);
  u *= 0.5;
  const double s = u.norm();
  const double c = std::clamp((rotation.trace() - 1.0) * 0.5, -1.0, 1.0);
  const double theta = std::atan2(s, c);
  if (theta > M_PI - kPiMargin)
    throw_degenerate("rotation angle within 1e-6 of pi has no unique log");
  if (s < kSmallAngle) return u * (1.0 + theta * theta / 6.0);
  return u * (theta / s);
}

Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& w) {
  const double theta = w.norm();
  const Eigen::Matrix3d wx = skew(w);
  double b, c;  // (1-cos t)/t^2, (t-sin t)/t^3
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    b = 0.5 - t2 / 24.0;
    c = 1.0 / 6.0 - t2 / 120.0;
  } else {
    const double t2 = theta * theta;
    b = (1.0 - std::cos(theta)) / t2;
    c = (theta - std::sin(theta)) / (t2 * theta);
  }
  return Eigen::Matrix3d::Identity() + b * wx + c * wx * wx;
}

Eigen::Matrix3d so3_left_jacobian_inv(const Eigen::Vector3d& w) {
  const double theta = w.norm();
  const Eigen::Matrix3d wx = skew(w);
  double a;  // 1/t^2 - (1+cos t)/(2 t sin t)
  if (theta < kSmallAngle) {
    a = 1.0 / 12.0 + theta * theta / 720.0;
  } else {
    a = 1.0 / (theta * theta) -
        (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  }
  return Eigen::Matrix3d::Identity() - 0.5 * wx + a * wx * wx;
}

Pose exp_map(const Twist& xi) {
  if (!xi.all_finite()) throw_invalid("twist contains non-finite entries");
  const Eigen::Vector3d v = xi.v();
  const Eigen::Vector3d w = xi.w();
  Pose pose(so3_exp(w), so3_left_jacobian(w) * v);
  pose.matrix.row(3) << 0.0, 0.0, 0.0, 1.0;
  return pose;
}

Twist log_map(const Pose& pose) {
  validate(pose);
  const Eigen::Vector3d w = so3_log(pose.rotation());
  const Eigen::Vector3d v = so3_left_jacobian_inv(w) * pose.translation();
  return Twist(v, w);
}

Pose compose(const Pose& a, const Pose& b) {
  validate(a);
  validate(b);
  Pose out(Eigen::Matrix4d(a.matrix * b.matrix));
  out.matrix.row(3) << 0.0, 0.0, 0.0, 1.0;
  return out;
}

Pose inverse(const Pose& pose) {
  validate(pose);
  const Eigen::Matrix3d rt = pose.rotation().transpose();
  return Pose(rt, Eigen::Vector3d(-rt * pose.translation()));
}

Pose relative(const Pose& ti, const Pose& tj) {
  return compose(inverse(ti), tj);
}

Matrix6d adjoint(const Pose& pose) {
  const Eigen::Matrix3d r = pose.rotation();
  Matrix6d ad = Matrix6d::Zero();
  ad.topLeftCorner<3, 3>() = r;
  ad.bottomRightCorner<3, 3>() = r;
  ad.topRightCorner<3, 3>() = skew(pose.translation()) * r;
  return ad;
}

Matrix6d left_jacobian(const Twist& xi) {
  const Eigen::Matrix3d jl = so3_left_jacobian(xi.w());
  Matrix6d j = Matrix6d::Zero();
  j.topLeftCorner<3, 3>() = jl;
  j.bottomRightCorner<3, 3>() = jl;
  j.topRightCorner<3, 3>() = se3_jacobian_q(xi.v(), xi.w());
  return j;
}

Matrix6d left_jacobian_inv(const Twist& xi) {
  const Eigen::Matrix3d jinv = so3_left_jacobian_inv(xi.w());
  const Eigen::Matrix3d q = se3_jacobian_q(xi.v(), xi.w());
  Matrix6d j = Matrix6d::Zero();
  j.topLeftCorner<3, 3>() = jinv;
  j.bottomRightCorner<3, 3>() = jinv;
  j.topRightCorner<3, 3>() = -jinv * q * jinv;
  return j;
}

Matrix6d right_jacobian(const Twist& xi) {
  return left_jacobian(Twist(Vector6d(-xi.coeffs)));
}

Matrix6d right_jacobian_inv(const Twist& xi) {
  return left_jacobian_inv(Twist(Vector6d(-xi.coeffs)));
}

}  // namespace savo::se3
