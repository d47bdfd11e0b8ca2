#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "savo/attention.hpp"
#include "savo/nn.hpp"
#include "savo/se3.hpp"
#include "savo/tensor.hpp"

namespace savo {

/// Ten-stage convolutional encoder over a stacked RGB pair. The first three
/// kernels are 7, 5, 5 at stride 2; the remaining strides alternate 1 and 2.
struct EncoderConfig {
  std::vector<int64_t> kernel_sizes = {7, 5, 5, 3, 3, 3, 3, 3, 3, 3};
  std::vector<int64_t> strides = {2, 2, 2, 1, 2, 1, 2, 1, 2, 1};
  std::vector<int64_t> channels = {64,  128, 256, 256,  512,
                                   512, 512, 512, 1024, 1024};
  int64_t input_channels = 6;

  void validate() const;
  /// Analytic spatial shape after all stages (ceil division per stride).
  std::pair<int64_t, int64_t> output_shape(int64_t h, int64_t w) const;
};

struct NetworkConfig {
  EncoderConfig encoder;
  AttentionConfig attention;  // d_in is synced to encoder.channels.back()
  bool attention_enabled = true;
  int64_t lstm_hidden = 1024;
  int64_t head_hidden = 128;
  int head_layers = 2;  // 1 = single affine output layer

  void validate() const;
};

/// Two-layer recurrent state, carried across windows at evaluation time.
struct RecurrentState {
  nn::LstmState layer0, layer1;
  bool empty() const { return layer0.empty(); }
  void reset() { layer0 = {}; layer1 = {}; }
};

struct PairCache {
  std::vector<nn::Conv2dCache> conv;
  std::vector<Tensor> preact;
  Tensor encoded;       // feature map entering the attention block
  Tensor attended;      // feature map entering the pooling stage
  AttentionInternals attention;
};

struct ForwardCache {
  std::vector<PairCache> pairs;
  std::vector<Eigen::VectorXd> motion;       // pooled motion vectors
  nn::LstmLayerCache lstm0, lstm1;
  std::vector<Eigen::VectorXd> lstm0_out;
  std::vector<Eigen::VectorXd> lstm1_out;
  std::vector<Eigen::VectorXd> head_pre;     // two-layer head hidden preact
};

/// CNN + self-attention + LSTM pose regressor. One instance is a single
/// logical stream: weights are immutable during forward and mutate only
/// through the optimizer between steps.
class PoseNet {
 public:
  PoseNet(const NetworkConfig& cfg, uint64_t seed);

  /// Encoder over one stacked image pair (6, H, W) -> (C, H', W').
  Tensor encode(const Tensor& pair, PairCache* cache = nullptr) const;

  /// Pooled motion vectors -> one twist per step through the recurrent
  /// model and the pose head. The state allows continuation across calls.
  std::vector<se3::Twist> temporal_forward(
      const std::vector<Eigen::VectorXd>& motions, RecurrentState& state,
      ForwardCache* cache = nullptr) const;

  /// Full pipeline over an ordered window of N+1 frames (each (3, H, W)),
  /// producing N twists. With attention disabled the SABlock is bypassed.
  std::vector<se3::Twist> forward(
      std::span<const Tensor> frames, RecurrentState& state,
      ForwardCache* cache = nullptr,
      std::vector<AttentionInternals>* internals = nullptr) const;

  /// Backprop through the caches of the matching forward call. Gradients
  /// accumulate on the parameters; when requested, returns the gradient
  /// with respect to each stacked input pair (for attribution).
  std::vector<Tensor> backward(const std::vector<se3::Vector6d>& grad_twists,
                               ForwardCache& cache,
                               bool need_input_grads = false);

  std::vector<nn::ParamRef> parameters();
  int64_t parameter_count();
  void zero_grad();

  std::map<std::string, Tensor> export_weights();
  /// Copies every archive entry whose key matches a parameter; unknown keys
  /// error, missing parameters keep their initialization.
  void load_weights(const std::map<std::string, Tensor>& archive);

  const NetworkConfig& config() const { return cfg_; }
  bool attention_enabled() const { return cfg_.attention_enabled; }
  SABlock& attention_block() { return attention_; }

  static Tensor stack_pair(const Tensor& a, const Tensor& b);

 private:
  NetworkConfig cfg_;
  std::vector<nn::Conv2d> convs_;
  SABlock attention_;
  nn::LstmLayer lstm0_, lstm1_;
  nn::Linear head0_, head1_;
};

}  // namespace savo
