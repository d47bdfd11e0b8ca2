#include "savo/network.hpp"

#include <algorithm>
#include <cmath>

#include "savo/errors.hpp"

namespace savo {

void EncoderConfig::validate() const {
  const size_t n = kernel_sizes.size();
  if (n != 10 || strides.size() != 10 || channels.size() != 10)
    throw_invalid("encoder expects exactly 10 stages");
  if (kernel_sizes[0] != 7 || kernel_sizes[1] != 5 || kernel_sizes[2] != 5)
    throw_invalid("first three encoder kernels must be 7, 5, 5");
  for (int i = 0; i < 3; ++i)
    if (strides[size_t(i)] != 2)
      throw_invalid("first three encoder stages must use stride 2");
  for (int i = 3; i < 10; ++i) {
    const int64_t expected = (i % 2 == 0) ? 2 : 1;
    if (strides[size_t(i)] != expected)
      throw_invalid("encoder strides after stage 3 must alternate 1 and 2");
  }
  for (int64_t c : channels)
    if (c <= 0) throw_invalid("encoder channel counts must be positive");
  if (input_channels <= 0) throw_invalid("input channel count must be positive");
}

std::pair<int64_t, int64_t> EncoderConfig::output_shape(int64_t h,
                                                        int64_t w) const {
  for (int64_t s : strides) {
    h = nn::Conv2d::out_size(h, s);
    w = nn::Conv2d::out_size(w, s);
  }
  return {h, w};
}

void NetworkConfig::validate() const {
  encoder.validate();
  attention.validate();
  if (lstm_hidden <= 0) throw_invalid("lstm_hidden must be positive");
  if (head_layers != 1 && head_layers != 2)
    throw_invalid("head_layers must be 1 or 2");
  if (head_layers == 2 && head_hidden <= 0)
    throw_invalid("head_hidden must be positive");
}

PoseNet::PoseNet(const NetworkConfig& cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.attention.d_in = cfg_.encoder.channels.back();
  cfg_.validate();

  convs_.resize(10);
  int64_t in_ch = cfg_.encoder.input_channels;
  for (int i = 0; i < 10; ++i) {
    const std::string name = "encoder.conv" + std::to_string(i);
    convs_[size_t(i)].init(in_ch, cfg_.encoder.channels[size_t(i)],
                           cfg_.encoder.kernel_sizes[size_t(i)],
                           cfg_.encoder.strides[size_t(i)], seed, name);
    in_ch = cfg_.encoder.channels[size_t(i)];
  }
  if (cfg_.attention_enabled)
    attention_ = SABlock(cfg_.attention, seed, "attention");

  lstm0_.init(in_ch, cfg_.lstm_hidden, seed, "lstm.l0");
  lstm1_.init(cfg_.lstm_hidden, cfg_.lstm_hidden, seed, "lstm.l1");
  if (cfg_.head_layers == 2) {
    head0_.init(cfg_.lstm_hidden, cfg_.head_hidden, seed, "head.fc0");
    head1_.init(cfg_.head_hidden, 6, seed, "head.fc1");
  } else {
    head0_.init(cfg_.lstm_hidden, 6, seed, "head.fc0");
  }
}

Tensor PoseNet::stack_pair(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 3 || !a.same_shape(b) || a.dim(0) != 3)
    throw_invalid("frame pair must be two (3, H, W) tensors of equal shape");
  Tensor out({6, a.dim(1), a.dim(2)});
  std::copy(a.data(), a.data() + a.numel(), out.data());
  std::copy(b.data(), b.data() + b.numel(), out.data() + a.numel());
  return out;
}

Tensor PoseNet::encode(const Tensor& pair, PairCache* cache) const {
  if (pair.ndim() != 3 || pair.dim(0) != cfg_.encoder.input_channels)
    throw_invalid("encoder input must be (" +
                  std::to_string(cfg_.encoder.input_channels) + ", H, W)");
  if (pair.dim(1) < 64 || pair.dim(2) < 64)
    throw_invalid("encoder input smaller than 64x64");

  Tensor x = pair;
  for (size_t i = 0; i < convs_.size(); ++i) {
    nn::Conv2dCache local;
    nn::Conv2dCache* cc = cache ? &cache->conv.emplace_back() : &local;
    Tensor pre = convs_[i].forward(x, cc);
    x = nn::leaky_relu(pre);
    if (cache) cache->preact.push_back(std::move(pre));
  }
  if (cache) cache->encoded = x;
  return x;
}

std::vector<se3::Twist> PoseNet::temporal_forward(
    const std::vector<Eigen::VectorXd>& motions, RecurrentState& state,
    ForwardCache* cache) const {
  if (motions.empty()) throw_invalid("temporal model needs at least one step");

  std::vector<Eigen::VectorXd> l0 = lstm0_.forward(
      motions, state.layer0, cache ? &cache->lstm0 : nullptr);
  std::vector<Eigen::VectorXd> l1 =
      lstm1_.forward(l0, state.layer1, cache ? &cache->lstm1 : nullptr);

  std::vector<se3::Twist> twists;
  twists.reserve(l1.size());
  for (const Eigen::VectorXd& h : l1) {
    Eigen::VectorXd out;
    if (cfg_.head_layers == 2) {
      Eigen::VectorXd pre = head0_.forward(h);
      Eigen::VectorXd hidden = pre;
      for (Eigen::Index j = 0; j < hidden.size(); ++j)
        if (hidden(j) < 0.0) hidden(j) *= nn::leaky_relu_slope();
      out = head1_.forward(hidden);
      if (cache) cache->head_pre.push_back(std::move(pre));
    } else {
      out = head0_.forward(h);
    }
    twists.emplace_back(se3::Vector6d(out));
  }
  if (cache) {
    cache->motion = motions;
    cache->lstm0_out = std::move(l0);
    cache->lstm1_out = std::move(l1);
  }
  return twists;
}

std::vector<se3::Twist> PoseNet::forward(
    std::span<const Tensor> frames, RecurrentState& state, ForwardCache* cache,
    std::vector<AttentionInternals>* internals) const {
  if (frames.size() < 2) throw_invalid("a window needs at least two frames");

  std::vector<Eigen::VectorXd> motions;
  motions.reserve(frames.size() - 1);
  for (size_t t = 0; t + 1 < frames.size(); ++t) {
    Tensor stacked = stack_pair(frames[t], frames[t + 1]);
    PairCache local;
    PairCache* pc = cache ? &cache->pairs.emplace_back() : &local;
    Tensor feat = encode(stacked, pc);
    if (cfg_.attention_enabled) {
      AttentionInternals* dest = nullptr;
      if (cache) dest = &pc->attention;
      else if (internals) dest = &internals->emplace_back();
      feat = attention_.forward(feat, dest);
      if (cache && internals) internals->push_back(pc->attention);
    }
    if (cache) pc->attended = feat;
    motions.push_back(global_average_pool(feat).vec());
  }
  return temporal_forward(motions, state, cache);
}

std::vector<Tensor> PoseNet::backward(
    const std::vector<se3::Vector6d>& grad_twists, ForwardCache& cache,
    bool need_input_grads) {
  const size_t steps = grad_twists.size();
  if (steps != cache.lstm1_out.size())
    throw_invalid("gradient count differs from forward step count");

  // head
  std::vector<Eigen::VectorXd> grad_h(steps);
  for (size_t t = 0; t < steps; ++t) {
    if (cfg_.head_layers == 2) {
      const Eigen::VectorXd& pre = cache.head_pre[t];
      Eigen::VectorXd hidden = pre;
      for (Eigen::Index j = 0; j < hidden.size(); ++j)
        if (hidden(j) < 0.0) hidden(j) *= nn::leaky_relu_slope();
      Eigen::VectorXd ghidden = head1_.backward(hidden, grad_twists[t]);
      for (Eigen::Index j = 0; j < ghidden.size(); ++j)
        if (pre(j) < 0.0) ghidden(j) *= nn::leaky_relu_slope();
      grad_h[t] = head0_.backward(cache.lstm1_out[t], ghidden);
    } else {
      grad_h[t] = head0_.backward(cache.lstm1_out[t], grad_twists[t]);
    }
  }

  // recurrent stack
  std::vector<Eigen::VectorXd> grad_l0 = lstm1_.backward(grad_h, cache.lstm1);
  std::vector<Eigen::VectorXd> grad_m = lstm0_.backward(grad_l0, cache.lstm0);

  // per-pair visual path
  std::vector<Tensor> input_grads;
  for (size_t t = 0; t < cache.pairs.size(); ++t) {
    PairCache& pc = cache.pairs[t];
    const Tensor& feat = pc.attended.numel() ? pc.attended : pc.encoded;
    const int64_t c = feat.dim(0), fh = feat.dim(1), fw = feat.dim(2);

    // pooling backward: spread the motion gradient evenly
    Tensor gfeat({c, fh, fw});
    const double inv = 1.0 / double(fh * fw);
    for (int64_t ch = 0; ch < c; ++ch) {
      const double g = grad_m[t](ch) * inv;
      for (int64_t s = 0; s < fh * fw; ++s) gfeat[ch * fh * fw + s] = g;
    }

    if (cfg_.attention_enabled)
      gfeat = attention_.backward(gfeat, pc.encoded, pc.attention);

    // encoder backward through activation + conv stages
    Tensor g = std::move(gfeat);
    for (int i = 9; i >= 0; --i) {
      g = nn::leaky_relu_backward(g, pc.preact[size_t(i)]);
      const bool need = need_input_grads || i > 0;
      g = convs_[size_t(i)].backward(g, pc.conv[size_t(i)], need);
    }
    if (need_input_grads) input_grads.push_back(std::move(g));

    // free the bulky activations as soon as the pair is consumed
    pc = PairCache{};
  }
  return input_grads;
}

std::vector<nn::ParamRef> PoseNet::parameters() {
  std::vector<nn::ParamRef> refs;
  for (size_t i = 0; i < convs_.size(); ++i)
    convs_[i].collect("encoder.conv" + std::to_string(i), refs);
  if (cfg_.attention_enabled) attention_.collect("attention", refs);
  lstm0_.collect("lstm.l0", refs);
  lstm1_.collect("lstm.l1", refs);
  head0_.collect("head.fc0", refs);
  if (cfg_.head_layers == 2) head1_.collect("head.fc1", refs);
  return refs;
}

int64_t PoseNet::parameter_count() {
  int64_t n = 0;
  for (const nn::ParamRef& p : parameters()) n += p.value->numel();
  return n;
}

void PoseNet::zero_grad() {
  for (nn::ParamRef& p : parameters()) p.grad->fill(0.0);
}

std::map<std::string, Tensor> PoseNet::export_weights() {
  std::map<std::string, Tensor> out;
  for (const nn::ParamRef& p : parameters()) out[p.name] = *p.value;
  return out;
}

void PoseNet::load_weights(const std::map<std::string, Tensor>& archive) {
  std::map<std::string, Tensor*> by_name;
  for (nn::ParamRef& p : parameters()) by_name[p.name] = p.value;
  for (const auto& [key, tensor] : archive) {
    auto it = by_name.find(key);
    if (it == by_name.end())
      throw_invalid("weight archive key does not match any parameter: " + key);
    if (tensor.numel() != it->second->numel())
      throw_invalid("weight archive shape mismatch for " + key);
    std::copy(tensor.data(), tensor.data() + tensor.numel(),
              it->second->data());
  }
}

}  // namespace savo
