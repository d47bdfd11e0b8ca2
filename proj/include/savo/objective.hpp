#pragma once

#include <optional>
#include <string>
#include <vector>

#include "savo/se3.hpp"

namespace savo {

/// Empirical second moment of the ground-truth frame-to-frame twists,
/// fitted once over the training set and frozen. The stored inverse is of
/// the regularized matrix sigma + epsilon * I.
struct CovarianceMatrix {
  se3::Matrix6d sigma = se3::Matrix6d::Identity();
  se3::Matrix6d sigma_inv = se3::Matrix6d::Identity();
  double epsilon = 0.0;
  se3::Twist mean_twist;

  /// Unit weighting: plain squared geodesic distance.
  static CovarianceMatrix identity();

  /// Builds the regularized inverse from an explicit sigma.
  static CovarianceMatrix from_sigma(const se3::Matrix6d& sigma,
                                     double epsilon);

  /// Symmetry to 1e-10, finiteness, and sigma_inv * (sigma + eps I) = I
  /// to 1e-8.
  void validate() const;

  std::string serialize() const;
  static CovarianceMatrix deserialize(const std::string& text);
};

struct LossValue {
  double value = 0.0;
  se3::Twist residual;
};

/// Pose error expressed in the algebra: ln(exp(xi) * T_star^-1).
se3::Twist residual(const se3::Twist& xi, const se3::Pose& t_star);

/// Covariance-weighted squared geodesic distance,
/// 0.5 * g^T * sigma_inv * g with g = residual(xi, t_star).
LossValue loss(const se3::Twist& xi, const se3::Pose& t_star,
               const CovarianceMatrix& cov);

/// Exact gradient of loss(...) with respect to xi.
se3::Vector6d loss_gradient(const se3::Twist& xi, const se3::Pose& t_star,
                            const CovarianceMatrix& cov);

/// Unbiased sample covariance over N >= 2 twists. Without an explicit
/// epsilon the regularizer defaults to 1e-6 * max(trace(sigma)/6, 1e-12),
/// keeping the inverse well-posed when some axes barely move. Summation
/// runs in a canonical sample order, so the result is exactly invariant
/// under reordering.
CovarianceMatrix fit_covariance(const std::vector<se3::Twist>& twists,
                                std::optional<double> epsilon = std::nullopt);

}  // namespace savo
