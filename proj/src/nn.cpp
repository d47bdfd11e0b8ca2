#include "savo/nn.hpp"

#include <cmath>

#include "savo/errors.hpp"

namespace savo::nn {

namespace {
constexpr double kLeakySlope = 0.1;
}

uint64_t mix_seed(uint64_t seed, const std::string& name) {
  uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ull;
  }
  h ^= seed + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

void he_normal_init(Tensor& t, int64_t fan_in, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / double(fan_in)));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = dist(rng);
}

void uniform_init(Tensor& t, double lo, double hi, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = dist(rng);
}

double leaky_relu_slope() { return kLeakySlope; }

Tensor leaky_relu(const Tensor& x) {
  Tensor y = x;
  for (int64_t i = 0; i < y.numel(); ++i)
    if (y[i] < 0.0) y[i] *= kLeakySlope;
  return y;
}

Tensor leaky_relu_backward(const Tensor& gy, const Tensor& preact) {
  Tensor gx = gy;
  for (int64_t i = 0; i < gx.numel(); ++i)
    if (preact[i] < 0.0) gx[i] *= kLeakySlope;
  return gx;
}

// ---------------------------------------------------------------------------
// Linear

void Linear::init(int64_t in_dim, int64_t out_dim, uint64_t seed,
                  const std::string& name) {
  in = in_dim;
  out = out_dim;
  weight = Tensor({out, in});
  bias = Tensor({out});
  grad_weight = Tensor({out, in});
  grad_bias = Tensor({out});
  he_normal_init(weight, in, mix_seed(seed, name + ".weight"));
}

Eigen::VectorXd Linear::forward(const Eigen::VectorXd& x) const {
  return weight.mat(out, in) * x + bias.vec();
}

Eigen::VectorXd Linear::backward(const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& gy) {
  grad_weight.mat(out, in).noalias() += gy * x.transpose();
  grad_bias.vec() += gy;
  return weight.mat(out, in).transpose() * gy;
}

void Linear::collect(const std::string& prefix, std::vector<ParamRef>& refs) {
  refs.push_back({prefix + ".weight", &weight, &grad_weight});
  refs.push_back({prefix + ".bias", &bias, &grad_bias});
}

void Linear::zero_grad() {
  grad_weight.fill(0.0);
  grad_bias.fill(0.0);
}

// ---------------------------------------------------------------------------
// Conv2d

void Conv2d::init(int64_t in_channels, int64_t out_channels,
                  int64_t kernel_size, int64_t stride_, uint64_t seed,
                  const std::string& name) {
  in_ch = in_channels;
  out_ch = out_channels;
  kernel = kernel_size;
  stride = stride_;
  const int64_t cols = in_ch * kernel * kernel;
  weight = Tensor({out_ch, cols});
  bias = Tensor({out_ch});
  grad_weight = Tensor({out_ch, cols});
  grad_bias = Tensor({out_ch});
  he_normal_init(weight, cols, mix_seed(seed, name + ".weight"));
}

int64_t Conv2d::out_size(int64_t in, int64_t stride) {
  return (in + stride - 1) / stride;
}

namespace {

// Gathers receptive fields into a (C*k*k) x (out_h*out_w) matrix.
RowMatrixXd im2col(const Tensor& x, int64_t kernel, int64_t stride,
                   int64_t out_h, int64_t out_w, int64_t pad_top,
                   int64_t pad_left) {
  const int64_t c_in = x.dim(0), h = x.dim(1), w = x.dim(2);
  RowMatrixXd cols = RowMatrixXd::Zero(c_in * kernel * kernel, out_h * out_w);
  for (int64_t ci = 0; ci < c_in; ++ci) {
    for (int64_t ky = 0; ky < kernel; ++ky) {
      for (int64_t kx = 0; kx < kernel; ++kx) {
        const int64_t row = (ci * kernel + ky) * kernel + kx;
        for (int64_t oy = 0; oy < out_h; ++oy) {
          const int64_t iy = oy * stride - pad_top + ky;
          if (iy < 0 || iy >= h) continue;
          for (int64_t ox = 0; ox < out_w; ++ox) {
            const int64_t ix = ox * stride - pad_left + kx;
            if (ix < 0 || ix >= w) continue;
            cols(row, oy * out_w + ox) = x.at3(ci, iy, ix);
          }
        }
      }
    }
  }
  return cols;
}

void col2im_add(const RowMatrixXd& cols, Tensor& x, int64_t kernel,
                int64_t stride, int64_t out_h, int64_t out_w, int64_t pad_top,
                int64_t pad_left) {
  const int64_t c_in = x.dim(0), h = x.dim(1), w = x.dim(2);
  for (int64_t ci = 0; ci < c_in; ++ci) {
    for (int64_t ky = 0; ky < kernel; ++ky) {
      for (int64_t kx = 0; kx < kernel; ++kx) {
        const int64_t row = (ci * kernel + ky) * kernel + kx;
        for (int64_t oy = 0; oy < out_h; ++oy) {
          const int64_t iy = oy * stride - pad_top + ky;
          if (iy < 0 || iy >= h) continue;
          for (int64_t ox = 0; ox < out_w; ++ox) {
            const int64_t ix = ox * stride - pad_left + kx;
            if (ix < 0 || ix >= w) continue;
            x.at3(ci, iy, ix) += cols(row, oy * out_w + ox);
          }
        }
      }
    }
  }
}

}  // namespace

Tensor Conv2d::forward(const Tensor& x, Conv2dCache* cache) const {
  if (x.ndim() != 3 || x.dim(0) != in_ch)
    throw_invalid("conv input has wrong rank or channel count");
  const int64_t h = x.dim(1), w = x.dim(2);
  const int64_t oh = out_size(h, stride), ow = out_size(w, stride);
  const int64_t pad_h = std::max<int64_t>((oh - 1) * stride + kernel - h, 0);
  const int64_t pad_w = std::max<int64_t>((ow - 1) * stride + kernel - w, 0);
  const int64_t pad_top = pad_h / 2, pad_left = pad_w / 2;

  RowMatrixXd cols = im2col(x, kernel, stride, oh, ow, pad_top, pad_left);
  Tensor y({out_ch, oh, ow});
  y.mat(out_ch, oh * ow).noalias() =
      weight.mat(out_ch, in_ch * kernel * kernel) * cols;
  y.mat(out_ch, oh * ow).colwise() += bias.vec();

  if (cache) {
    cache->input = x;
    cache->out_h = oh;
    cache->out_w = ow;
    cache->pad_top = pad_top;
    cache->pad_left = pad_left;
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& gy, const Conv2dCache& cache,
                        bool need_input_grad) {
  const int64_t oh = cache.out_h, ow = cache.out_w;
  const int64_t kk = in_ch * kernel * kernel;
  RowMatrixXd cols = im2col(cache.input, kernel, stride, oh, ow,
                            cache.pad_top, cache.pad_left);
  ConstMatMap gym = gy.mat(out_ch, oh * ow);
  grad_weight.mat(out_ch, kk).noalias() += gym * cols.transpose();
  grad_bias.vec() += gym.rowwise().sum();

  if (!need_input_grad) return Tensor();
  RowMatrixXd gcols = weight.mat(out_ch, kk).transpose() * gym;
  Tensor gx(cache.input.shape());
  col2im_add(gcols, gx, kernel, stride, oh, ow, cache.pad_top,
             cache.pad_left);
  return gx;
}

void Conv2d::collect(const std::string& prefix, std::vector<ParamRef>& refs) {
  refs.push_back({prefix + ".weight", &weight, &grad_weight});
  refs.push_back({prefix + ".bias", &bias, &grad_bias});
}

void Conv2d::zero_grad() {
  grad_weight.fill(0.0);
  grad_bias.fill(0.0);
}

// ---------------------------------------------------------------------------
// LSTM

namespace {
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

void LstmLayer::init(int64_t in_dim, int64_t hidden_dim, uint64_t seed,
                     const std::string& name) {
  in = in_dim;
  hidden = hidden_dim;
  w_ih = Tensor({4 * hidden, in});
  w_hh = Tensor({4 * hidden, hidden});
  b_ih = Tensor({4 * hidden});
  b_hh = Tensor({4 * hidden});
  grad_w_ih = Tensor({4 * hidden, in});
  grad_w_hh = Tensor({4 * hidden, hidden});
  grad_b_ih = Tensor({4 * hidden});
  grad_b_hh = Tensor({4 * hidden});

  const double bound = 1.0 / std::sqrt(double(hidden));
  uniform_init(w_ih, -bound, bound, mix_seed(seed, name + ".w_ih"));
  uniform_init(w_hh, -bound, bound, mix_seed(seed, name + ".w_hh"));
  uniform_init(b_ih, -bound, bound, mix_seed(seed, name + ".b_ih"));
  uniform_init(b_hh, -bound, bound, mix_seed(seed, name + ".b_hh"));
  // forget-gate bias offset
  for (int64_t i = hidden; i < 2 * hidden; ++i) b_ih[i] += 1.0;
}

std::vector<Eigen::VectorXd> LstmLayer::forward(
    const std::vector<Eigen::VectorXd>& xs, LstmState& state,
    LstmLayerCache* cache) const {
  if (state.empty()) {
    state.h = Eigen::VectorXd::Zero(hidden);
    state.c = Eigen::VectorXd::Zero(hidden);
  }
  if (state.h.size() != hidden || state.c.size() != hidden)
    throw_invalid("LSTM state shape mismatch");

  ConstMatMap wih = w_ih.mat(4 * hidden, in);
  ConstMatMap whh = w_hh.mat(4 * hidden, hidden);
  std::vector<Eigen::VectorXd> outputs;
  outputs.reserve(xs.size());

  for (const Eigen::VectorXd& x : xs) {
    if (x.size() != in) throw_invalid("LSTM input width mismatch");
    Eigen::VectorXd pre = wih * x + b_ih.vec() + whh * state.h + b_hh.vec();
    Eigen::VectorXd i(hidden), f(hidden), g(hidden), o(hidden);
    for (int64_t j = 0; j < hidden; ++j) {
      i(j) = sigmoid(pre(j));
      f(j) = sigmoid(pre(hidden + j));
      g(j) = std::tanh(pre(2 * hidden + j));
      o(j) = sigmoid(pre(3 * hidden + j));
    }
    Eigen::VectorXd c_new =
        f.cwiseProduct(state.c) + i.cwiseProduct(g);
    Eigen::VectorXd tc = c_new.array().tanh().matrix();
    Eigen::VectorXd h_new = o.cwiseProduct(tc);

    if (cache) {
      cache->x.push_back(x);
      cache->h_prev.push_back(state.h);
      cache->c_prev.push_back(state.c);
      cache->i.push_back(i);
      cache->f.push_back(f);
      cache->g.push_back(g);
      cache->o.push_back(o);
      cache->tanh_c.push_back(tc);
    }
    state.h = h_new;
    state.c = c_new;
    outputs.push_back(h_new);
  }
  return outputs;
}

std::vector<Eigen::VectorXd> LstmLayer::backward(
    const std::vector<Eigen::VectorXd>& grad_h, const LstmLayerCache& cache) {
  const int64_t steps = static_cast<int64_t>(grad_h.size());
  std::vector<Eigen::VectorXd> grad_x(static_cast<size_t>(steps));

  MatMap wih = w_ih.mat(4 * hidden, in);
  MatMap whh = w_hh.mat(4 * hidden, hidden);
  MatMap gwih = grad_w_ih.mat(4 * hidden, in);
  MatMap gwhh = grad_w_hh.mat(4 * hidden, hidden);

  Eigen::VectorXd dh_carry = Eigen::VectorXd::Zero(hidden);
  Eigen::VectorXd dc_carry = Eigen::VectorXd::Zero(hidden);

  for (int64_t t = steps - 1; t >= 0; --t) {
    const size_t st = static_cast<size_t>(t);
    const auto& i = cache.i[st];
    const auto& f = cache.f[st];
    const auto& g = cache.g[st];
    const auto& o = cache.o[st];
    const auto& tc = cache.tanh_c[st];

    Eigen::VectorXd dh = grad_h[st] + dh_carry;
    Eigen::VectorXd dc =
        dh.cwiseProduct(o).cwiseProduct(
            (1.0 - tc.array().square()).matrix()) +
        dc_carry;

    Eigen::VectorXd pre_grad(4 * hidden);
    pre_grad.segment(0, hidden) =
        dc.cwiseProduct(g).cwiseProduct(i).cwiseProduct(
            (1.0 - i.array()).matrix());
    pre_grad.segment(hidden, hidden) =
        dc.cwiseProduct(cache.c_prev[st])
            .cwiseProduct(f)
            .cwiseProduct((1.0 - f.array()).matrix());
    pre_grad.segment(2 * hidden, hidden) =
        dc.cwiseProduct(i).cwiseProduct((1.0 - g.array().square()).matrix());
    pre_grad.segment(3 * hidden, hidden) =
        dh.cwiseProduct(tc).cwiseProduct(o).cwiseProduct(
            (1.0 - o.array()).matrix());

    gwih.noalias() += pre_grad * cache.x[st].transpose();
    gwhh.noalias() += pre_grad * cache.h_prev[st].transpose();
    grad_b_ih.vec() += pre_grad;
    grad_b_hh.vec() += pre_grad;

    grad_x[st] = wih.transpose() * pre_grad;
    dh_carry = whh.transpose() * pre_grad;
    dc_carry = dc.cwiseProduct(f);
  }
  return grad_x;
}

void LstmLayer::collect(const std::string& prefix,
                        std::vector<ParamRef>& refs) {
  refs.push_back({prefix + ".w_ih", &w_ih, &grad_w_ih});
  refs.push_back({prefix + ".w_hh", &w_hh, &grad_w_hh});
  refs.push_back({prefix + ".b_ih", &b_ih, &grad_b_ih});
  refs.push_back({prefix + ".b_hh", &b_hh, &grad_b_hh});
}

void LstmLayer::zero_grad() {
  grad_w_ih.fill(0.0);
  grad_w_hh.fill(0.0);
  grad_b_ih.fill(0.0);
  grad_b_hh.fill(0.0);
}

// ---------------------------------------------------------------------------
// Adam

void Adam::step(const std::vector<ParamRef>& params) {
  ++step_count_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, double(step_count_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, double(step_count_));
  for (const ParamRef& p : params) {
    Tensor& m = m_[p.name];
    Tensor& v = v_[p.name];
    if (m.numel() != p.value->numel()) m = Tensor(p.value->shape());
    if (v.numel() != p.value->numel()) v = Tensor(p.value->shape());
    for (int64_t i = 0; i < p.value->numel(); ++i) {
      const double g = (*p.grad)[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      (*p.value)[i] -=
          cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    }
  }
}

std::map<std::string, Tensor> Adam::export_state() const {
  std::map<std::string, Tensor> out;
  for (const auto& [k, t] : m_) out["adam.m." + k] = t;
  for (const auto& [k, t] : v_) out["adam.v." + k] = t;
  Tensor step_tensor({1});
  step_tensor[0] = double(step_count_);
  out["adam.step"] = step_tensor;
  return out;
}

void Adam::import_state(const std::map<std::string, Tensor>& state) {
  m_.clear();
  v_.clear();
  step_count_ = 0;
  for (const auto& [k, t] : state) {
    if (k.rfind("adam.m.", 0) == 0) m_[k.substr(7)] = t;
    else if (k.rfind("adam.v.", 0) == 0) v_[k.substr(7)] = t;
    else if (k == "adam.step") step_count_ = static_cast<int64_t>(t[0]);
  }
}

double global_grad_norm(const std::vector<ParamRef>& params) {
  double sq = 0.0;
  for (const ParamRef& p : params)
    for (int64_t i = 0; i < p.grad->numel(); ++i) sq += (*p.grad)[i] * (*p.grad)[i];
  return std::sqrt(sq);
}

void clip_grad_norm(const std::vector<ParamRef>& params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (norm <= max_norm || norm == 0.0) return;
  const double scale = max_norm / norm;
  for (const ParamRef& p : params)
    for (int64_t i = 0; i < p.grad->numel(); ++i) (*p.grad)[i] *= scale;
}

}  // namespace savo::nn
