#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "savo/tensor.hpp"

namespace savo::nn {

/// Named handle onto a parameter tensor and its gradient accumulator.
struct ParamRef {
  std::string name;
  Tensor* value = nullptr;
  Tensor* grad = nullptr;
};

/// Deterministic per-parameter seeding: the stream depends only on the
/// global seed and the parameter name, so models sharing a name prefix
/// initialize identically regardless of which other parameters exist.
uint64_t mix_seed(uint64_t seed, const std::string& name);

void he_normal_init(Tensor& t, int64_t fan_in, uint64_t seed);
void uniform_init(Tensor& t, double lo, double hi, uint64_t seed);

double leaky_relu_slope();
Tensor leaky_relu(const Tensor& x);
Tensor leaky_relu_backward(const Tensor& gy, const Tensor& preact);

struct Linear {
  int64_t in = 0;
  int64_t out = 0;
  Tensor weight, bias;      // (out, in), (out)
  Tensor grad_weight, grad_bias;

  void init(int64_t in_dim, int64_t out_dim, uint64_t seed,
            const std::string& name);
  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  Eigen::VectorXd backward(const Eigen::VectorXd& x,
                           const Eigen::VectorXd& gy);
  void collect(const std::string& prefix, std::vector<ParamRef>& refs);
  void zero_grad();
};

struct Conv2dCache {
  Tensor input;        // (C, H, W) copy; im2col is rebuilt in backward
  int64_t out_h = 0, out_w = 0;
  int64_t pad_top = 0, pad_left = 0;
};

/// 2-D convolution with same padding: output spatial size is
/// ceil(input / stride); total padding splits with the smaller half first.
struct Conv2d {
  int64_t in_ch = 0, out_ch = 0, kernel = 0, stride = 1;
  Tensor weight, bias;  // (out_ch, in_ch*k*k), (out_ch)
  Tensor grad_weight, grad_bias;

  void init(int64_t in_channels, int64_t out_channels, int64_t kernel_size,
            int64_t stride_, uint64_t seed, const std::string& name);
  static int64_t out_size(int64_t in, int64_t stride);
  Tensor forward(const Tensor& x, Conv2dCache* cache) const;
  /// Accumulates weight gradients; returns the input gradient when
  /// need_input_grad is set, otherwise an empty tensor.
  Tensor backward(const Tensor& gy, const Conv2dCache& cache,
                  bool need_input_grad);
  void collect(const std::string& prefix, std::vector<ParamRef>& refs);
  void zero_grad();
};

struct LstmState {
  Eigen::VectorXd h, c;
  bool empty() const { return h.size() == 0; }
};

struct LstmLayerCache {
  std::vector<Eigen::VectorXd> x, h_prev, c_prev, i, f, g, o, tanh_c;
};

/// Single LSTM layer, gate order (input, forget, cell, output).
struct LstmLayer {
  int64_t in = 0, hidden = 0;
  Tensor w_ih, w_hh, b_ih, b_hh;  // (4H, in), (4H, H), (4H), (4H)
  Tensor grad_w_ih, grad_w_hh, grad_b_ih, grad_b_hh;

  void init(int64_t in_dim, int64_t hidden_dim, uint64_t seed,
            const std::string& name);
  std::vector<Eigen::VectorXd> forward(const std::vector<Eigen::VectorXd>& xs,
                                       LstmState& state,
                                       LstmLayerCache* cache) const;
  /// BPTT. The incoming boundary state is treated as constant.
  std::vector<Eigen::VectorXd> backward(
      const std::vector<Eigen::VectorXd>& grad_h,
      const LstmLayerCache& cache);
  void collect(const std::string& prefix, std::vector<ParamRef>& refs);
  void zero_grad();
};

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction; moments are keyed by parameter name so the
/// optimizer state can be checkpointed and restored exactly.
class Adam {
 public:
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  void step(const std::vector<ParamRef>& params);
  int64_t step_count() const { return step_count_; }

  std::map<std::string, Tensor> export_state() const;
  void import_state(const std::map<std::string, Tensor>& state);

 private:
  AdamConfig cfg_;
  int64_t step_count_ = 0;
  std::map<std::string, Tensor> m_, v_;
};

double global_grad_norm(const std::vector<ParamRef>& params);
void clip_grad_norm(const std::vector<ParamRef>& params, double max_norm);

}  // namespace savo::nn
