#pragma once

#include <cmath>
#include <vector>

#include "sclab/mat.hpp"
#include "sclab/model.hpp"
#include "sclab/ops.hpp"

namespace sclab {

struct LossConfig {
  float logit_scale_cap = 100.f;
  float l1_lambda = 0.f;  // 0 disables the sparsity penalty
  float eps_norm = 1e-12f;

  void validate() const {
    if (logit_scale_cap <= 0.f) throw ConfigError("LossConfig: logit_scale_cap must be > 0");
    if (l1_lambda < 0.f) throw ConfigError("LossConfig: l1_lambda must be >= 0");
  }
};

template <typename T>
struct SimilarityCacheT {
  Mat<T> z_img_norm;
  Mat<T> z_txt_norm;
  T eff_scale = T(0);
  bool clamped = false;
};

// S = clamp(exp(log_scale), cap) * normalize(z_img) normalize(z_txt)^T.
// The cap clamps the effective multiplier, not the parameter; gradient to
// log_scale is zero in the clamped region.
template <typename T>
Mat<T> similarity_logits(const Mat<T>& z_img, const Mat<T>& z_txt, T log_scale, T cap,
                         T eps_norm = T(1e-12), SimilarityCacheT<T>* cache = nullptr) {
  if (z_img.cols != z_txt.cols) throw ShapeError("similarity_logits: embed dim mismatch");
  SimilarityCacheT<T> local;
  SimilarityCacheT<T>& c = cache ? *cache : local;
  const T e = std::exp(log_scale);
  c.clamped = !(e < cap);
  c.eff_scale = c.clamped ? cap : e;
  c.z_img_norm = l2_normalize_rows(z_img, eps_norm);
  c.z_txt_norm = l2_normalize_rows(z_txt, eps_norm);
  return scale(matmul_nt(c.z_img_norm, c.z_txt_norm), c.eff_scale);
}

template <typename T>
struct SimilarityGradsT {
  Mat<T> grad_z_img;
  Mat<T> grad_z_txt;
  T grad_log_scale = T(0);
};

template <typename T>
SimilarityGradsT<T> similarity_logits_backward(const Mat<T>& z_img, const Mat<T>& z_txt,
                                               const SimilarityCacheT<T>& cache, const Mat<T>& grad_s,
                                               T eps_norm = T(1e-12)) {
  SimilarityGradsT<T> out;
  // dS/dlog_scale = S when unclamped (S = e^ls * C), 0 when clamped.
  if (!cache.clamped) {
    double acc = 0.0;
    const Mat<T> c = matmul_nt(cache.z_img_norm, cache.z_txt_norm);
    for (std::size_t i = 0; i < c.size(); ++i) {
      acc += double(grad_s.data[i]) * double(c.data[i]) * double(cache.eff_scale);
    }
    out.grad_log_scale = T(acc);
  }
  Mat<T> gz_img_norm = scale(matmul(grad_s, cache.z_txt_norm), cache.eff_scale);
  Mat<T> gz_txt_norm = scale(matmul_tn(grad_s, cache.z_img_norm), cache.eff_scale);
  out.grad_z_img = l2_normalize_rows_backward(z_img, gz_img_norm, eps_norm);
  out.grad_z_txt = l2_normalize_rows_backward(z_txt, gz_txt_norm, eps_norm);
  return out;
}

template <typename T>
struct ClipLossResult {
  T loss;
  Mat<T> grad;
};

// Symmetric contrastive loss over a square similarity matrix with matched
// pairs on the diagonal: 0.5 * (CE over rows + CE over columns). A batch of
// one has no negatives; defined as loss 0 with zero gradient.
template <typename T>
ClipLossResult<T> clip_loss(const Mat<T>& s) {
  if (s.rows != s.cols) throw ShapeError("clip_loss: similarity matrix must be square");
  if (s.rows == 1) return {T(0), Mat<T>(1, 1)};
  std::vector<int> diag(std::size_t(s.rows));
  for (int i = 0; i < s.rows; ++i) diag[std::size_t(i)] = i;
  auto row_ce = softmax_cross_entropy_rows(s, diag);
  auto col_ce = softmax_cross_entropy_rows(transpose(s), diag);
  Mat<T> grad(s.rows, s.cols);
  for (int i = 0; i < s.rows; ++i) {
    for (int j = 0; j < s.cols; ++j) {
      grad(i, j) = T(0.5) * (row_ce.grad(i, j) + col_ce.grad(j, i));
    }
  }
  return {T(0.5) * (row_ce.loss + col_ce.loss), std::move(grad)};
}

template <typename T>
struct L1PenaltyResult {
  T penalty;
  Mat<T> grad;
};

// lambda * mean over rows of the per-row L1 norm; subgradient 0 at 0.
// Applied to pre-normalization head outputs, where it can reach exact zeros.
template <typename T>
L1PenaltyResult<T> l1_penalty(const Mat<T>& z, T lambda) {
  if (lambda < T(0)) throw ConfigError("l1_penalty: lambda must be >= 0");
  Mat<T> grad(z.rows, z.cols);
  if (lambda == T(0) || z.rows == 0) return {T(0), std::move(grad)};
  double acc = 0.0;
  const T g = lambda / T(z.rows);
  for (int r = 0; r < z.rows; ++r) {
    const T* row = z.row(r);
    T* grow = grad.row(r);
    for (int c = 0; c < z.cols; ++c) {
      acc += std::abs(double(row[c]));
      grow[c] = row[c] > T(0) ? g : (row[c] < T(0) ? -g : T(0));
    }
  }
  return {T(double(lambda) * acc / z.rows), std::move(grad)};
}

template <typename T>
struct ObjectiveResultT {
  T loss = T(0);
  T eff_scale = T(0);
  TowerGradsT<T> image_grads;
  TowerGradsT<T> text_grads;
  T grad_log_scale = T(0);
  Mat<T> z_img;  // raw (pre-normalization) embeddings
  Mat<T> z_txt;
};

// Full training objective: contrastive loss on capped-scale cosine logits
// plus the optional L1 penalty on both towers' raw embeddings.
template <typename T>
ObjectiveResultT<T> contrastive_objective(const ModelParamsT<T>& params, const Mat<T>& image_inputs,
                                          const Mat<T>& text_inputs, T l1_lambda, T eps_norm = T(1e-12)) {
  if (image_inputs.rows != text_inputs.rows) {
    throw ShapeError("contrastive_objective: batch sizes differ");
  }
  ObjectiveResultT<T> out;
  TowerCacheT<T> img_cache, txt_cache;
  out.z_img = encode(params.image_tower, image_inputs, &img_cache);
  out.z_txt = encode(params.text_tower, text_inputs, &txt_cache);

  SimilarityCacheT<T> sim_cache;
  Mat<T> s = similarity_logits(out.z_img, out.z_txt, params.log_logit_scale, params.logit_scale_cap,
                               eps_norm, &sim_cache);
  out.eff_scale = sim_cache.eff_scale;

  auto ce = clip_loss(s);
  auto sim_grads = similarity_logits_backward(out.z_img, out.z_txt, sim_cache, ce.grad, eps_norm);

  out.loss = ce.loss;
  out.grad_log_scale = sim_grads.grad_log_scale;

  Mat<T> gz_img = std::move(sim_grads.grad_z_img);
  Mat<T> gz_txt = std::move(sim_grads.grad_z_txt);
  if (l1_lambda > T(0)) {
    auto p_img = l1_penalty(out.z_img, l1_lambda);
    auto p_txt = l1_penalty(out.z_txt, l1_lambda);
    out.loss += p_img.penalty + p_txt.penalty;
    gz_img = add(gz_img, p_img.grad);
    gz_txt = add(gz_txt, p_txt.grad);
  }

  out.image_grads = encode_backward(img_cache, gz_img);
  out.text_grads = encode_backward(txt_cache, gz_txt);
  return out;
}

}  // namespace sclab
