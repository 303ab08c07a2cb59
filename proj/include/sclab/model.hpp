#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sclab/errors.hpp"
#include "sclab/mat.hpp"
#include "sclab/ops.hpp"
#include "sclab/rng.hpp"

namespace sclab {

// Projection-head nonlinearity. L1 sparsity lives in the loss, not here.
struct HeadMode {
  enum Kind { Linear, ReLU, TopK } kind = ReLU;
  int k = 0;  // TopK only

  static HeadMode linear() { return {Linear, 0}; }
  static HeadMode relu() { return {ReLU, 0}; }
  static HeadMode topk(int k) { return {TopK, k}; }

  std::string name() const {
    switch (kind) {
      case Linear: return "linear";
      case ReLU: return "relu";
      case TopK: return "topk" + std::to_string(k);
    }
    return "?";
  }

  static HeadMode parse(const std::string& s);
};

template <typename T>
struct DenseLayerT {
  Mat<T> weight;          // in x out
  std::vector<T> bias;    // out
};

// One encoder tower: MLP with ReLU hidden activations, then an expanded
// projection, then the head nonlinearity. Output rows are NOT normalized;
// the loss normalizes, so raw activations stay available for L0/steering.
template <typename T>
struct TowerParamsT {
  std::vector<DenseLayerT<T>> layers;  // may be empty (projection only)
  Mat<T> proj_weight;                  // hidden_dim x embed_dim
  std::vector<T> proj_bias;            // embed_dim
  HeadMode head_mode;
  uint64_t revision = 0;  // bumped on every parameter update

  int input_dim() const {
    return layers.empty() ? proj_weight.rows : layers.front().weight.rows;
  }
  int embed_dim() const { return proj_weight.cols; }

  template <typename U>
  TowerParamsT<U> cast() const {
    TowerParamsT<U> out;
    for (const auto& l : layers) {
      DenseLayerT<U> lu;
      lu.weight = l.weight.template cast<U>();
      lu.bias.assign(l.bias.begin(), l.bias.end());
      out.layers.push_back(std::move(lu));
    }
    out.proj_weight = proj_weight.template cast<U>();
    out.proj_bias.assign(proj_bias.begin(), proj_bias.end());
    out.head_mode = head_mode;
    out.revision = revision;
    return out;
  }
};

template <typename T>
struct ModelParamsT {
  TowerParamsT<T> image_tower;
  TowerParamsT<T> text_tower;
  T log_logit_scale = T(0);  // learnable; exp() clamped to (0, cap] at use
  T logit_scale_cap = T(100);

  int embed_dim() const { return image_tower.embed_dim(); }

  void bump_revision() {
    ++image_tower.revision;
    ++text_tower.revision;
  }

  template <typename U>
  ModelParamsT<U> cast() const {
    ModelParamsT<U> out;
    out.image_tower = image_tower.template cast<U>();
    out.text_tower = text_tower.template cast<U>();
    out.log_logit_scale = U(log_logit_scale);
    out.logit_scale_cap = U(logit_scale_cap);
    return out;
  }
};

using TowerParams = TowerParamsT<float>;
using ModelParams = ModelParamsT<float>;

struct ModelConfig {
  int image_input_dim = 0;
  int text_input_dim = 0;
  std::vector<int> hidden_dims = {32};  // at least one entry; last is hidden_dim
  int expansion_factor = 16;            // embed_dim = expansion * hidden_dim
  HeadMode head_mode = HeadMode::relu();
  float logit_scale_cap = 100.f;

  int hidden_dim() const { return hidden_dims.empty() ? 0 : hidden_dims.back(); }
  int embed_dim() const { return expansion_factor * hidden_dim(); }
  void validate() const;
};

// Weights ~ N(0, 1/sqrt(fan_in)), biases zero,
// log_logit_scale = min(ln(1/0.07), ln(cap)).
ModelParams init_params(const ModelConfig& cfg, uint64_t seed);

template <typename T>
struct TowerCacheT {
  const TowerParamsT<T>* params = nullptr;
  uint64_t revision = 0;
  Mat<T> input;
  std::vector<Mat<T>> hidden_pre;  // per hidden layer, pre-ReLU
  std::vector<Mat<T>> hidden_out;  // per hidden layer, post-ReLU
  Mat<T> head_pre;                 // projection output, pre-head
  Mat<T> output;                   // post-head embeddings
  Mat<T> topk_mask;                // TopK only
};

template <typename T>
struct TowerGradsT {
  std::vector<DenseLayerT<T>> layers;  // same shapes as params
  Mat<T> proj_weight;
  std::vector<T> proj_bias;
};

using TowerCache = TowerCacheT<float>;
using TowerGrads = TowerGradsT<float>;

template <typename T>
Mat<T> apply_head(const HeadMode& head, const Mat<T>& pre, Mat<T>* mask_out) {
  switch (head.kind) {
    case HeadMode::Linear:
      return pre;
    case HeadMode::ReLU:
      return relu(pre);
    case HeadMode::TopK:
      return topk_rows(pre, head.k, mask_out);
  }
  throw ConfigError("apply_head: unknown head mode");
}

template <typename T>
Mat<T> encode(const TowerParamsT<T>& tower, const Mat<T>& inputs, TowerCacheT<T>* cache = nullptr) {
  if (inputs.cols != tower.input_dim()) {
    throw ShapeError("encode: input dim " + std::to_string(inputs.cols) + " != tower input dim " +
                     std::to_string(tower.input_dim()));
  }
  TowerCacheT<T> local;
  TowerCacheT<T>& c = cache ? *cache : local;
  c.params = &tower;
  c.revision = tower.revision;
  c.input = inputs;
  c.hidden_pre.clear();
  c.hidden_out.clear();

  const Mat<T>* h = &c.input;
  for (const auto& layer : tower.layers) {
    Mat<T> pre = matmul(*h, layer.weight);
    add_row_inplace(pre, layer.bias);
    c.hidden_pre.push_back(std::move(pre));
    c.hidden_out.push_back(relu(c.hidden_pre.back()));
    h = &c.hidden_out.back();
  }
  c.head_pre = matmul(*h, tower.proj_weight);
  add_row_inplace(c.head_pre, tower.proj_bias);
  c.output = apply_head(tower.head_mode, c.head_pre, &c.topk_mask);
  return c.output;
}

// Exact gradients of the encode map. TopK passes gradient only through the
// surviving indices; ReLU uses subgradient 0 at 0.
template <typename T>
TowerGradsT<T> encode_backward(const TowerCacheT<T>& cache, const Mat<T>& grad_out, Mat<T>* grad_in = nullptr) {
  if (!cache.params) throw UsageError("encode_backward: cache not produced by encode");
  const TowerParamsT<T>& tower = *cache.params;
  if (cache.revision != tower.revision) {
    throw UsageError("encode_backward: stale cache (parameters updated since encode)");
  }
  if (!grad_out.same_shape(cache.output)) throw ShapeError("encode_backward: grad_out shape mismatch");

  Mat<T> g;  // gradient wrt head_pre
  switch (tower.head_mode.kind) {
    case HeadMode::Linear:
      g = grad_out;
      break;
    case HeadMode::ReLU:
      g = relu_backward(cache.head_pre, grad_out);
      break;
    case HeadMode::TopK:
      g = hadamard(grad_out, cache.topk_mask);
      break;
  }

  TowerGradsT<T> grads;
  grads.layers.resize(tower.layers.size());

  const Mat<T>& last_hidden = tower.layers.empty() ? cache.input : cache.hidden_out.back();
  grads.proj_weight = matmul_tn(last_hidden, g);
  grads.proj_bias = col_sums(g);

  Mat<T> gh = matmul_nt(g, tower.proj_weight);  // grad wrt last hidden output
  for (int li = int(tower.layers.size()) - 1; li >= 0; --li) {
    Mat<T> gpre = relu_backward(cache.hidden_pre[std::size_t(li)], gh);
    const Mat<T>& below = li == 0 ? cache.input : cache.hidden_out[std::size_t(li) - 1];
    grads.layers[std::size_t(li)].weight = matmul_tn(below, gpre);
    grads.layers[std::size_t(li)].bias = col_sums(gpre);
    gh = matmul_nt(gpre, tower.layers[std::size_t(li)].weight);
  }
  if (grad_in) *grad_in = std::move(gh);
  return grads;
}

// Worst relative error between analytic full-model gradients (through the
// contrastive objective) and central differences, over a deterministic
// sample of parameters. Runs in double: float32 central differences would
// drown the 1e-3 tolerance in cancellation noise.
double grad_check(const ModelParams& params, const Matrix& image_inputs, const Matrix& text_inputs,
                  double eps = 1e-3, int samples_per_block = 24, uint64_t seed = 0);

// Shifts any ReLU unit whose batch pre-activations sit within `margin` of 0
// by adjusting its bias, so finite differences never cross a kink.
void jitter_relu_biases(ModelParams& params, const Matrix& image_inputs, const Matrix& text_inputs,
                        float margin = 0.02f);

}  // namespace sclab
