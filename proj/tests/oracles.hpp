#pragma once

// Independent reference implementations used by the tests. These stay
// deliberately naive (series expansions, nested loops, direct definitions)
// and never call back into the code paths they check.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

// Truncated Taylor series of the matrix exponential of the 4x4 twist matrix
// [[skew(w), v], [0, 0]], 30 terms.
inline Eigen::Matrix4d expm_series(const Eigen::Matrix<double, 6, 1>& xi) {
  Eigen::Matrix4d a = Eigen::Matrix4d::Zero();
  a(0, 1) = -xi(5);
  a(0, 2) = xi(4);
  a(1, 0) = xi(5);
  a(1, 2) = -xi(3);
  a(2, 0) = -xi(4);
  a(2, 1) = xi(3);
  a.block<3, 1>(0, 3) = xi.head<3>();

  Eigen::Matrix4d sum = Eigen::Matrix4d::Identity();
  Eigen::Matrix4d term = Eigen::Matrix4d::Identity();
  for (int k = 1; k <= 30; ++k) {
    term = Eigen::Matrix4d(term * a) / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

// Central finite difference of a scalar function of a flat vector.
inline Eigen::VectorXd central_difference(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double eps) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    xp(i) += eps;
    xm(i) -= eps;
    g(i) = (f(xp) - f(xm)) / (2.0 * eps);
  }
  return g;
}

// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)
inline double max_relative_error(const Eigen::VectorXd& a,
                                 const Eigen::VectorXd& b,
                                 double floor_ = 1e-6) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a(i)), std::abs(b(i)), floor_});
    worst = std::max(worst, std::abs(a(i) - b(i)) / denom);
  }
  return worst;
}

// Straight-line reimplementation of the attention block equations with
// nested loops: Q = Wq X, K = Wk X, V = Wv X, row-softmax of Qt K / sqrt(dk),
// O = lambda Vt (transposed back), X' = X + gamma * Wo O. Single head.
struct DenseAttentionResult {
  Eigen::MatrixXd output;  // d_in x n
  Eigen::MatrixXd lambda;  // n x n
};

inline DenseAttentionResult dense_attention(const Eigen::MatrixXd& x,
                                            const Eigen::MatrixXd& wq,
                                            const Eigen::MatrixXd& wk,
                                            const Eigen::MatrixXd& wv,
                                            const Eigen::MatrixXd& wo,
                                            double gamma) {
  const int d_in = static_cast<int>(x.rows());
  const int n = static_cast<int>(x.cols());
  const int dk = static_cast<int>(wq.rows());
  const int dv = static_cast<int>(wv.rows());

  auto matmul = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i)
      for (int j = 0; j < b.cols(); ++j)
        for (int k = 0; k < a.cols(); ++k) c(i, j) += a(i, k) * b(k, j);
    return c;
  };

  Eigen::MatrixXd q = matmul(wq, x);
  Eigen::MatrixXd k = matmul(wk, x);
  Eigen::MatrixXd v = matmul(wv, x);

  Eigen::MatrixXd scores = matmul(q.transpose(), k) / std::sqrt(double(dk));
  Eigen::MatrixXd lambda(n, n);
  for (int r = 0; r < n; ++r) {
    const double m = scores.row(r).maxCoeff();
    double z = 0.0;
    for (int c = 0; c < n; ++c) z += std::exp(scores(r, c) - m);
    for (int c = 0; c < n; ++c) lambda(r, c) = std::exp(scores(r, c) - m) / z;
  }

  Eigen::MatrixXd o_head = matmul(lambda, Eigen::MatrixXd(v.transpose()));
  Eigen::MatrixXd o = o_head.transpose();  // dv x n
  Eigen::MatrixXd out = x + gamma * matmul(wo, o);
  (void)d_in;
  (void)dv;
  return {out, lambda};
}

// Direct nested-loop 2-D convolution with same padding (output size is
// ceil(in / stride); total padding splits with the smaller half first).
// x is (C, H, W) flattened row-major, weight is (OC, C*k*k) row-major.
inline std::vector<double> naive_conv2d_same(
    const std::vector<double>& x, int c_in, int h, int w,
    const std::vector<double>& weight, const std::vector<double>& bias,
    int out_ch, int kernel, int stride, int& out_h, int& out_w) {
  out_h = (h + stride - 1) / stride;
  out_w = (w + stride - 1) / stride;
  const int pad_h = std::max((out_h - 1) * stride + kernel - h, 0);
  const int pad_w = std::max((out_w - 1) * stride + kernel - w, 0);
  const int pad_top = pad_h / 2;
  const int pad_left = pad_w / 2;

  std::vector<double> y(static_cast<size_t>(out_ch) * out_h * out_w, 0.0);
  for (int oc = 0; oc < out_ch; ++oc) {
    for (int oy = 0; oy < out_h; ++oy) {
      for (int ox = 0; ox < out_w; ++ox) {
        double acc = bias[static_cast<size_t>(oc)];
        for (int ci = 0; ci < c_in; ++ci) {
          for (int ky = 0; ky < kernel; ++ky) {
            const int iy = oy * stride - pad_top + ky;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < kernel; ++kx) {
              const int ix = ox * stride - pad_left + kx;
              if (ix < 0 || ix >= w) continue;
              const size_t wi =
                  static_cast<size_t>(oc) * c_in * kernel * kernel +
                  (static_cast<size_t>(ci) * kernel + ky) * kernel + kx;
              const size_t xi =
                  (static_cast<size_t>(ci) * h + iy) * w + ix;
              acc += weight[wi] * x[xi];
            }
          }
        }
        y[(static_cast<size_t>(oc) * out_h + oy) * out_w + ox] = acc;
      }
    }
  }
  return y;
}

// Two-pass sample covariance with an explicit double loop.
inline Eigen::MatrixXd brute_force_covariance(
    const std::vector<Eigen::Matrix<double, 6, 1>>& samples) {
  const int n = static_cast<int>(samples.size());
  Eigen::Matrix<double, 6, 1> mean = Eigen::Matrix<double, 6, 1>::Zero();
  for (const auto& s : samples) mean += s;
  mean /= double(n);
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(6, 6);
  for (const auto& s : samples) {
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j)
        sigma(i, j) += (s(i) - mean(i)) * (s(j) - mean(j));
  }
  sigma /= double(n - 1);
  return sigma;
}

// Brute-force KITTI relative-error oracle: walks every start frame on the
// stride grid and every target length, using Eigen's generic 4x4 inverse.
struct KittiErrorsOracle {
  std::vector<double> t_err_percent;
  std::vector<double> r_err_deg_per_m;
};

inline KittiErrorsOracle brute_force_kitti_errors(
    const std::vector<Eigen::Matrix4d>& est,
    const std::vector<Eigen::Matrix4d>& gt, int step = 10) {
  KittiErrorsOracle out;
  const int n = static_cast<int>(gt.size());
  std::vector<double> dist(static_cast<size_t>(n), 0.0);
  for (int i = 1; i < n; ++i) {
    const Eigen::Vector3d d =
        gt[size_t(i)].block<3, 1>(0, 3) - gt[size_t(i - 1)].block<3, 1>(0, 3);
    dist[size_t(i)] = dist[size_t(i - 1)] + d.norm();
  }
  const double lengths[] = {100, 200, 300, 400, 500, 600, 700, 800};
  for (int s = 0; s < n; s += step) {
    for (double len : lengths) {
      int e = -1;
      for (int j = s; j < n; ++j) {
        if (dist[size_t(j)] - dist[size_t(s)] >= len) {
          e = j;
          break;
        }
      }
      if (e < 0) continue;
      const Eigen::Matrix4d rel_gt =
          Eigen::Matrix4d(gt[size_t(s)].inverse() * gt[size_t(e)]);
      const Eigen::Matrix4d rel_est =
          Eigen::Matrix4d(est[size_t(s)].inverse() * est[size_t(e)]);
      const Eigen::Matrix4d err = Eigen::Matrix4d(rel_gt.inverse() * rel_est);
      const double t = err.block<3, 1>(0, 3).norm();
      const double tr = err.block<3, 3>(0, 0).trace();
      const double ang =
          std::acos(std::clamp((tr - 1.0) * 0.5, -1.0, 1.0));
      out.t_err_percent.push_back(t / len * 100.0);
      out.r_err_deg_per_m.push_back(ang * 180.0 / M_PI / len);
    }
  }
  return out;
}

}  // namespace oracle
