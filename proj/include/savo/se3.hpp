#pragma once

#include <Eigen/Core>

namespace savo::se3 {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

/// Element of se(3), stored as a flat 6-vector ordered [translation, rotation]
/// (meters, radians).
struct Twist {
  Vector6d coeffs = Vector6d::Zero();

  Twist() = default;
  explicit Twist(const Vector6d& c) : coeffs(c) {}
  Twist(const Eigen::Vector3d& v, const Eigen::Vector3d& w) {
    coeffs.head<3>() = v;
    coeffs.tail<3>() = w;
  }

  Eigen::Vector3d v() const { return coeffs.head<3>(); }
  Eigen::Vector3d w() const { return coeffs.tail<3>(); }
  bool all_finite() const { return coeffs.allFinite(); }
};

/// Rigid transformation in SE(3) held as a 4x4 matrix. The bottom row is
/// exactly (0,0,0,1); the rotation block must be orthonormal to 1e-6.
struct Pose {
  Eigen::Matrix4d matrix = Eigen::Matrix4d::Identity();

  Pose() = default;
  explicit Pose(const Eigen::Matrix4d& m) : matrix(m) {}
  Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation) {
    matrix.setIdentity();
    matrix.topLeftCorner<3, 3>() = rotation;
    matrix.topRightCorner<3, 1>() = translation;
  }

  Eigen::Matrix3d rotation() const { return matrix.topLeftCorner<3, 3>(); }
  Eigen::Vector3d translation() const { return matrix.topRightCorner<3, 1>(); }

  static Pose identity() { return Pose(); }
};

/// Throws ErrorKind::InvalidArgument when the Pose invariants are violated
/// (affine bottom row, orthonormality and unit determinant to 1e-6).
void validate(const Pose& pose);

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

/// SO(3) exponential (Rodrigues) with a series fallback below 1e-8.
Eigen::Matrix3d so3_exp(const Eigen::Vector3d& w);

/// SO(3) logarithm. Throws ErrorKind::DegenerateRotation when the angle is
/// within 1e-6 of pi.
Eigen::Vector3d so3_log(const Eigen::Matrix3d& rotation);

/// Left Jacobian of SO(3) and its inverse.
Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& w);
Eigen::Matrix3d so3_left_jacobian_inv(const Eigen::Vector3d& w);

/// Closed-form SE(3) exponential: Rodrigues rotation plus left-Jacobian
/// translation. Throws on non-finite input.
Pose exp_map(const Twist& xi);

/// SE(3) logarithm; inverse of exp_map for rotation angles below pi.
Twist log_map(const Pose& pose);

Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& pose);

/// relative(Ti, Tj) = inverse(Ti) * Tj.
Pose relative(const Pose& ti, const Pose& tj);

/// Adjoint of SE(3) under the [v, w] ordering:
///   exp(adjoint(T) * xi) = T * exp(xi) * T^-1.
Matrix6d adjoint(const Pose& pose);

/// Left/right Jacobians of the SE(3) exponential and their inverses, again
/// under the [v, w] ordering:
///   exp(xi + d) ~ exp(left_jacobian(xi) d) * exp(xi)
///   exp(xi + d) ~ exp(xi) * exp(right_jacobian(xi) d)
Matrix6d left_jacobian(const Twist& xi);
Matrix6d left_jacobian_inv(const Twist& xi);
Matrix6d right_jacobian(const Twist& xi);
Matrix6d right_jacobian_inv(const Twist& xi);

}  // namespace savo::se3
