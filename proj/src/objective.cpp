#include "savo/objective.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "savo/errors.hpp"

namespace savo {

CovarianceMatrix CovarianceMatrix::identity() {
  CovarianceMatrix cov;
  cov.sigma.setIdentity();
  cov.sigma_inv.setIdentity();
  cov.epsilon = 0.0;
  return cov;
}

CovarianceMatrix CovarianceMatrix::from_sigma(const se3::Matrix6d& sigma,
                                              double epsilon) {
  if (epsilon < 0.0) throw_invalid("covariance regularizer must be >= 0");
  CovarianceMatrix cov;
  cov.sigma = sigma;
  cov.epsilon = epsilon;
  const se3::Matrix6d reg =
      sigma + epsilon * se3::Matrix6d::Identity();
  Eigen::LLT<se3::Matrix6d> llt(reg);
  if (llt.info() != Eigen::Success)
    throw_numeric("regularized covariance is not positive definite");
  cov.sigma_inv = llt.solve(se3::Matrix6d::Identity());
  return cov;
}

void CovarianceMatrix::validate() const {
  if (!sigma.allFinite() || !sigma_inv.allFinite() || !std::isfinite(epsilon))
    throw_invalid("covariance holds non-finite entries");
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw_invalid("covariance is not symmetric");
  const se3::Matrix6d reg =
      sigma + epsilon * se3::Matrix6d::Identity();
  const se3::Matrix6d product = sigma_inv * reg;
  if ((product - se3::Matrix6d::Identity()).cwiseAbs().maxCoeff() > 1e-8)
    throw_invalid("stored inverse does not match the regularized covariance");
}

std::string CovarianceMatrix::serialize() const {
  std::ostringstream out;
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
  };
  out << "epsilon ";
  put(epsilon);
  out << "\nmean";
  for (int i = 0; i < 6; ++i) {
    out << ' ';
    put(mean_twist.coeffs(i));
  }
  out << "\nsigma\n";
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) {
      if (c) out << ' ';
      put(sigma(r, c));
    }
    out << '\n';
  }
  return out.str();
}

CovarianceMatrix CovarianceMatrix::deserialize(const std::string& text) {
  std::istringstream in(text);
  std::string tag;
  double epsilon = 0.0;
  se3::Vector6d mean;
  se3::Matrix6d sigma;

  if (!(in >> tag) || tag != "epsilon" || !(in >> epsilon))
    throw_parse("covariance artifact: expected 'epsilon <value>'");
  if (!(in >> tag) || tag != "mean")
    throw_parse("covariance artifact: expected 'mean <6 values>'");
  for (int i = 0; i < 6; ++i)
    if (!(in >> mean(i)))
      throw_parse("covariance artifact: mean twist needs 6 values");
  if (!(in >> tag) || tag != "sigma")
    throw_parse("covariance artifact: expected 'sigma' block");
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c)
      if (!(in >> sigma(r, c)))
        throw_parse("covariance artifact: sigma block needs 36 values");

  CovarianceMatrix cov = from_sigma(sigma, epsilon);
  cov.mean_twist = se3::Twist(mean);
  cov.validate();
  return cov;
}

se3::Twist residual(const se3::Twist& xi, const se3::Pose& t_star) {
  return se3::log_map(se3::compose(se3::exp_map(xi), se3::inverse(t_star)));
}

LossValue loss(const se3::Twist& xi, const se3::Pose& t_star,
               const CovarianceMatrix& cov) {
  LossValue out;
  out.residual = residual(xi, t_star);
  const se3::Vector6d& g = out.residual.coeffs;
  out.value = 0.5 * g.dot(cov.sigma_inv * g);
  if (!std::isfinite(out.value)) throw_numeric("loss is not finite");
  return out;
}

se3::Vector6d loss_gradient(const se3::Twist& xi, const se3::Pose& t_star,
                            const CovarianceMatrix& cov) {
  // g(xi) = ln(exp(xi) T*^-1); a perturbation d on xi moves g by
  //   dg = Jr^-1(g) Ad(T*) Jr(xi) d
  // so the chain rule transposes that product onto sigma_inv * g.
  const se3::Vector6d g = residual(xi, t_star).coeffs;
  const se3::Matrix6d jr_inv_g = se3::right_jacobian_inv(se3::Twist(g));
  const se3::Matrix6d ad = se3::adjoint(t_star);
  const se3::Matrix6d jr_xi = se3::right_jacobian(xi);
  return jr_xi.transpose() *
         (ad.transpose() * (jr_inv_g.transpose() * (cov.sigma_inv * g)));
}

CovarianceMatrix fit_covariance(const std::vector<se3::Twist>& twists,
                                std::optional<double> epsilon) {
  const size_t n = twists.size();
  if (n < 2)
    throw_insufficient("covariance fit needs at least two twists, got " +
                       std::to_string(n));
  for (const se3::Twist& t : twists)
    if (!t.all_finite()) throw_invalid("covariance fit saw non-finite twist");

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t(0));
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    for (int i = 0; i < 6; ++i) {
      if (twists[a].coeffs(i) != twists[b].coeffs(i))
        return twists[a].coeffs(i) < twists[b].coeffs(i);
    }
    return false;
  });

  se3::Vector6d mean = se3::Vector6d::Zero();
  for (size_t i : order) mean += twists[i].coeffs;
  mean /= double(n);

  se3::Matrix6d sigma = se3::Matrix6d::Zero();
  for (size_t i : order) {
    const se3::Vector6d d = twists[i].coeffs - mean;
    sigma += d * d.transpose();
  }
  sigma /= double(n - 1);

  const double eps = epsilon.has_value()
                         ? *epsilon
                         : 1e-6 * std::max(sigma.trace() / 6.0, 1e-12);
  if (eps <= 0.0)
    throw_invalid("covariance regularizer must be positive");

  CovarianceMatrix cov = CovarianceMatrix::from_sigma(sigma, eps);
  cov.mean_twist = se3::Twist(mean);
  return cov;
}

}  // namespace savo
