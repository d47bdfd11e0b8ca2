#pragma once

#include <Eigen/Core>
#include <vector>

#include "savo/nn.hpp"
#include "savo/tensor.hpp"

namespace savo {

struct AttentionConfig {
  int64_t d_in = 1024;
  int64_t d_k = 128;
  int64_t d_v = 128;
  int64_t heads = 1;
  double gamma_init = 0.0;

  void validate() const;
};

/// Intermediate quantities of one attention forward pass. Rows of every
/// lambda sum to one.
struct AttentionInternals {
  Eigen::MatrixXd q, k, v;              // (d_k x n), (d_k x n), (d_v x n)
  std::vector<Eigen::MatrixXd> lambda;  // per head, each (n x n)
  Eigen::MatrixXd o;                    // (d_v x n) concatenated heads
  Eigen::MatrixXd wo_o;                 // (d_in x n) pre-residual projection
};

/// Spatial self-attention over an encoder feature map: position-wise
/// query/key/value projections, row-softmax attention, output projection,
/// and a residual scaled by a learnable gain that starts at zero.
class SABlock {
 public:
  SABlock() = default;
  SABlock(const AttentionConfig& cfg, uint64_t seed, const std::string& name);

  /// x is a (C, H, W) feature map with C == d_in; output has the same shape.
  Tensor forward(const Tensor& x, AttentionInternals* internals) const;

  /// Needs the internals produced by the matching forward call. Accumulates
  /// parameter gradients and returns the input gradient.
  Tensor backward(const Tensor& gy, const Tensor& x,
                  const AttentionInternals& internals);

  void collect(const std::string& prefix, std::vector<nn::ParamRef>& refs);
  void zero_grad();

  const AttentionConfig& config() const { return cfg_; }
  double gamma() const { return gamma_[0]; }
  void set_gamma(double g) { gamma_[0] = g; }

  Tensor w_q, w_k, w_v, w_o;  // (d_k,d_in) x2, (d_v,d_in), (d_in,d_v)
  Tensor grad_w_q, grad_w_k, grad_w_v, grad_w_o, grad_gamma;

 private:
  AttentionConfig cfg_;
  Tensor gamma_;  // single learnable scalar
};

/// Spatial mean per channel of a (C, H, W) feature map.
Tensor global_average_pool(const Tensor& x);

}  // namespace savo
