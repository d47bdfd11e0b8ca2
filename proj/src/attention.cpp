#include "savo/attention.hpp"

#include <cmath>

#include "savo/errors.hpp"

namespace savo {

void AttentionConfig::validate() const {
  if (d_in <= 0 || d_k <= 0 || d_v <= 0)
    throw_invalid("attention dimensions must be positive");
  if (heads < 1) throw_invalid("attention needs at least one head");
  if (d_k % heads != 0)
    throw_invalid("attention d_k must be divisible by the head count");
  if (d_v % heads != 0)
    throw_invalid("attention d_v must be divisible by the head count");
}

SABlock::SABlock(const AttentionConfig& cfg, uint64_t seed,
                 const std::string& name)
    : cfg_(cfg) {
  cfg_.validate();
  w_q = Tensor({cfg_.d_k, cfg_.d_in});
  w_k = Tensor({cfg_.d_k, cfg_.d_in});
  w_v = Tensor({cfg_.d_v, cfg_.d_in});
  w_o = Tensor({cfg_.d_in, cfg_.d_v});
  grad_w_q = Tensor({cfg_.d_k, cfg_.d_in});
  grad_w_k = Tensor({cfg_.d_k, cfg_.d_in});
  grad_w_v = Tensor({cfg_.d_v, cfg_.d_in});
  grad_w_o = Tensor({cfg_.d_in, cfg_.d_v});
  gamma_ = Tensor({1});
  grad_gamma = Tensor({1});
  gamma_[0] = cfg_.gamma_init;

  nn::he_normal_init(w_q, cfg_.d_in, nn::mix_seed(seed, name + ".w_q"));
  nn::he_normal_init(w_k, cfg_.d_in, nn::mix_seed(seed, name + ".w_k"));
  nn::he_normal_init(w_v, cfg_.d_in, nn::mix_seed(seed, name + ".w_v"));
  nn::he_normal_init(w_o, cfg_.d_v, nn::mix_seed(seed, name + ".w_o"));
}

namespace {

// Row-softmax with the usual max shift.
Eigen::MatrixXd row_softmax(const Eigen::MatrixXd& scores) {
  Eigen::MatrixXd out(scores.rows(), scores.cols());
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    const double m = scores.row(r).maxCoeff();
    Eigen::ArrayXd e = (scores.row(r).array() - m).exp();
    out.row(r) = (e / e.sum()).matrix();
  }
  return out;
}

}  // namespace

Tensor SABlock::forward(const Tensor& x, AttentionInternals* internals) const {
  if (x.ndim() != 3 || x.dim(0) != cfg_.d_in)
    throw_invalid("attention input channel count differs from d_in");
  if (!x.all_finite())
    throw_numeric("attention block: non-finite input feature map");
  const int64_t n = x.dim(1) * x.dim(2);
  ConstMatMap xm = x.mat(cfg_.d_in, n);

  Eigen::MatrixXd q = w_q.mat(cfg_.d_k, cfg_.d_in) * xm;
  Eigen::MatrixXd k = w_k.mat(cfg_.d_k, cfg_.d_in) * xm;
  Eigen::MatrixXd v = w_v.mat(cfg_.d_v, cfg_.d_in) * xm;

  const int64_t dk_h = cfg_.d_k / cfg_.heads;
  const int64_t dv_h = cfg_.d_v / cfg_.heads;
  const double scale = 1.0 / std::sqrt(double(dk_h));

  std::vector<Eigen::MatrixXd> lambdas;
  lambdas.reserve(static_cast<size_t>(cfg_.heads));
  Eigen::MatrixXd o(cfg_.d_v, n);
  for (int64_t h = 0; h < cfg_.heads; ++h) {
    auto qh = q.middleRows(h * dk_h, dk_h);
    auto kh = k.middleRows(h * dk_h, dk_h);
    auto vh = v.middleRows(h * dv_h, dv_h);
    Eigen::MatrixXd lambda =
        row_softmax(Eigen::MatrixXd(qh.transpose() * kh * scale));
    // lambda V^T, transposed back to (dv_h x n)
    o.middleRows(h * dv_h, dv_h) = (lambda * vh.transpose()).transpose();
    lambdas.push_back(std::move(lambda));
  }

  Eigen::MatrixXd wo_o = w_o.mat(cfg_.d_in, cfg_.d_v) * o;
  Tensor out(x.shape());
  out.mat(cfg_.d_in, n) = xm + gamma_[0] * wo_o;
  if (!out.all_finite())
    throw_numeric("attention block: non-finite output feature map");

  if (internals) {
    internals->q = std::move(q);
    internals->k = std::move(k);
    internals->v = std::move(v);
    internals->lambda = std::move(lambdas);
    internals->o = std::move(o);
    internals->wo_o = std::move(wo_o);
  }
  return out;
}

Tensor SABlock::backward(const Tensor& gy, const Tensor& x,
                         const AttentionInternals& in) {
  const int64_t n = x.dim(1) * x.dim(2);
  ConstMatMap xm = x.mat(cfg_.d_in, n);
  ConstMatMap gym = gy.mat(cfg_.d_in, n);
  const double gamma = gamma_[0];

  grad_gamma[0] += (gym.array() * in.wo_o.array()).sum();

  // through the residual branch: d(wo_o) = gamma * gy
  Eigen::MatrixXd d_o =
      gamma * (w_o.mat(cfg_.d_in, cfg_.d_v).transpose() * gym);
  grad_w_o.mat(cfg_.d_in, cfg_.d_v).noalias() +=
      gamma * (gym * in.o.transpose());

  const int64_t dk_h = cfg_.d_k / cfg_.heads;
  const int64_t dv_h = cfg_.d_v / cfg_.heads;
  const double scale = 1.0 / std::sqrt(double(dk_h));

  Eigen::MatrixXd dq(cfg_.d_k, n), dk(cfg_.d_k, n), dv(cfg_.d_v, n);
  for (int64_t h = 0; h < cfg_.heads; ++h) {
    const Eigen::MatrixXd& lambda = in.lambda[static_cast<size_t>(h)];
    auto qh = in.q.middleRows(h * dk_h, dk_h);
    auto kh = in.k.middleRows(h * dk_h, dk_h);
    auto vh = in.v.middleRows(h * dv_h, dv_h);

    // o_h (n x dv_h) = lambda * v_h^T; incoming grad is (dv_h x n)
    Eigen::MatrixXd go_h = d_o.middleRows(h * dv_h, dv_h).transpose();
    Eigen::MatrixXd dlambda = go_h * vh;                    // (n x n)
    dv.middleRows(h * dv_h, dv_h) = go_h.transpose() * lambda;

    // softmax backward per row
    Eigen::MatrixXd dscores(n, n);
    for (int64_t r = 0; r < n; ++r) {
      const double dot = dlambda.row(r).dot(lambda.row(r));
      dscores.row(r) =
          (lambda.row(r).array() * (dlambda.row(r).array() - dot)).matrix();
    }

    dq.middleRows(h * dk_h, dk_h) = kh * dscores.transpose() * scale;
    dk.middleRows(h * dk_h, dk_h) = qh * dscores * scale;
  }

  grad_w_q.mat(cfg_.d_k, cfg_.d_in).noalias() += dq * xm.transpose();
  grad_w_k.mat(cfg_.d_k, cfg_.d_in).noalias() += dk * xm.transpose();
  grad_w_v.mat(cfg_.d_v, cfg_.d_in).noalias() += dv * xm.transpose();

  Tensor gx(x.shape());
  gx.mat(cfg_.d_in, n) = gym +
                         w_q.mat(cfg_.d_k, cfg_.d_in).transpose() * dq +
                         w_k.mat(cfg_.d_k, cfg_.d_in).transpose() * dk +
                         w_v.mat(cfg_.d_v, cfg_.d_in).transpose() * dv;
  return gx;
}

void SABlock::collect(const std::string& prefix,
                      std::vector<nn::ParamRef>& refs) {
  refs.push_back({prefix + ".w_q", &w_q, &grad_w_q});
  refs.push_back({prefix + ".w_k", &w_k, &grad_w_k});
  refs.push_back({prefix + ".w_v", &w_v, &grad_w_v});
  refs.push_back({prefix + ".w_o", &w_o, &grad_w_o});
  refs.push_back({prefix + ".gamma", &gamma_, &grad_gamma});
}

void SABlock::zero_grad() {
  grad_w_q.fill(0.0);
  grad_w_k.fill(0.0);
  grad_w_v.fill(0.0);
  grad_w_o.fill(0.0);
  grad_gamma.fill(0.0);
}

Tensor global_average_pool(const Tensor& x) {
  if (x.ndim() != 3) throw_invalid("global average pool expects (C, H, W)");
  const int64_t c = x.dim(0), spatial = x.dim(1) * x.dim(2);
  if (spatial == 0) throw_invalid("global average pool over empty extent");
  Tensor m({c});
  m.vec() = x.mat(c, spatial).rowwise().mean();
  return m;
}

}  // namespace savo
