#include "sclab/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "sclab/adam.hpp"
#include "sclab/errors.hpp"
#include "sclab/ops.hpp"
#include "sclab/rng.hpp"

namespace sclab {

namespace {

double reconstruction_objective(const Matrix& a, const Matrix& u, const Matrix& v) {
  const Matrix recon = matmul_nt(u, v);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = double(a.data[i]) - double(recon.data[i]);
    acc += d * d;
  }
  return acc;
}

// out = base .* numer ./ (denom + delta), all entrywise in double
void multiplicative_update(Matrix& base, const Matrix& numer, const Matrix& denom) {
  constexpr double delta = 1e-12;
  for (std::size_t i = 0; i < base.size(); ++i) {
    base.data[i] = float(double(base.data[i]) * double(numer.data[i]) /
                         (double(denom.data[i]) + delta));
  }
}

}  // namespace

NmfResult nmf(const Matrix& a, int k, int iters, uint64_t seed) {
  if (k < 1) throw ConfigError("nmf: k must be >= 1");
  for (float v : a.data) {
    if (v < 0.f) throw DomainError("nmf: input matrix must be nonnegative");
  }
  Rng rng(seed);
  NmfResult res;
  // strict positivity keeps the multiplicative updates well-defined
  res.factors.u = rng.uniform_mat(a.rows, k, 0.1f, 1.1f);
  res.factors.v = rng.uniform_mat(a.cols, k, 0.1f, 1.1f);
  Matrix& u = res.factors.u;
  Matrix& v = res.factors.v;

  res.objective_trace.push_back(reconstruction_objective(a, u, v));
  for (int it = 0; it < iters; ++it) {
    // U <- U .* (A V) ./ (U V^T V)
    const Matrix av = matmul(a, v);
    const Matrix vtv = matmul_tn(v, v);
    const Matrix uvtv = matmul(u, vtv);
    multiplicative_update(u, av, uvtv);
    // V <- V .* (A^T U) ./ (V U^T U)
    const Matrix atu = matmul_tn(a, u);
    const Matrix utu = matmul_tn(u, u);
    const Matrix vutu = matmul(v, utu);
    multiplicative_update(v, atu, vutu);
    res.objective_trace.push_back(reconstruction_objective(a, u, v));
  }
  return res;
}

namespace {

void normalize_decoder_rows(Matrix& dec) {
  for (int r = 0; r < dec.rows; ++r) {
    const double norm = row_norm(dec, r);
    if (norm == 0.0) continue;
    float* row = dec.row(r);
    for (int c = 0; c < dec.cols; ++c) row[c] = float(double(row[c]) / norm);
  }
}

}  // namespace

Matrix sae_encode(const SaeParams& params, const Matrix& a) {
  Matrix pre = matmul(a, params.enc_weight);
  add_row_inplace(pre, params.enc_bias);
  return topk_rows(pre, params.k_active);
}

Matrix sae_decode(const SaeParams& params, const Matrix& latents) {
  Matrix recon = matmul(latents, params.dec_weight);
  add_row_inplace(recon, params.dec_bias);
  return recon;
}

SaeResult sae_train(const Matrix& a, int dict_size, int k_active, int epochs, float lr, uint64_t seed) {
  if (dict_size < a.cols) throw ConfigError("sae_train: dict_size must be >= input dim");
  if (k_active < 1 || k_active > dict_size) throw ConfigError("sae_train: k_active must be in [1, dict_size]");
  if (a.rows < 1) throw ConfigError("sae_train: empty input");

  Rng root(seed);
  Rng init_rng = root.derive(1);
  Rng order_rng = root.derive(2);

  SaeResult res;
  SaeParams& p = res.params;
  p.k_active = k_active;
  p.enc_weight = init_rng.gaussian(a.cols, dict_size, 0.f, 1.f / std::sqrt(float(a.cols)));
  p.enc_bias.assign(std::size_t(dict_size), 0.f);
  p.dec_weight = init_rng.gaussian(dict_size, a.cols, 0.f, 1.f / std::sqrt(float(dict_size)));
  normalize_decoder_rows(p.dec_weight);
  p.dec_bias.assign(std::size_t(a.cols), 0.f);

  std::vector<ParamView> views = {
      {p.enc_weight.data.data(), p.enc_weight.size(), false},
      {p.enc_bias.data(), p.enc_bias.size(), false},
      {p.dec_weight.data.data(), p.dec_weight.size(), false},
      {p.dec_bias.data(), p.dec_bias.size(), false},
  };
  AdamState state;
  state.init(views);
  AdamHyper hyper;
  hyper.learning_rate = lr;

  const int batch = std::min(64, a.rows);
  std::vector<int> order(std::size_t(a.rows));
  for (int i = 0; i < a.rows; ++i) order[std::size_t(i)] = i;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    order_rng.shuffle(order);
    for (int start = 0; start + batch <= a.rows; start += batch) {
      Matrix xb(batch, a.cols);
      for (int i = 0; i < batch; ++i) {
        const float* src = a.row(order[std::size_t(start + i)]);
        std::copy(src, src + a.cols, xb.row(i));
      }
      Matrix pre = matmul(xb, p.enc_weight);
      add_row_inplace(pre, p.enc_bias);
      Matrix mask;
      Matrix z = topk_rows(pre, k_active, &mask);
      Matrix recon = matmul(z, p.dec_weight);
      add_row_inplace(recon, p.dec_bias);

      // d/drecon of mean-per-row squared error
      Matrix grad_recon(batch, a.cols);
      const float inv = 2.f / float(batch);
      for (std::size_t i = 0; i < grad_recon.size(); ++i) {
        grad_recon.data[i] = inv * (recon.data[i] - xb.data[i]);
      }
      Matrix g_dec_w = matmul_tn(z, grad_recon);
      std::vector<float> g_dec_b = col_sums(grad_recon);
      Matrix gz = hadamard(matmul_nt(grad_recon, p.dec_weight), mask);
      Matrix g_enc_w = matmul_tn(xb, gz);
      std::vector<float> g_enc_b = col_sums(gz);

      std::vector<ParamView> grads = {
          {g_enc_w.data.data(), g_enc_w.size(), false},
          {g_enc_b.data(), g_enc_b.size(), false},
          {g_dec_w.data.data(), g_dec_w.size(), false},
          {g_dec_b.data(), g_dec_b.size(), false},
      };
      adam_step(views, grads, state, hyper);
      normalize_decoder_rows(p.dec_weight);
    }
    res.fvu_trace.push_back(fvu(a, sae_decode(p, sae_encode(p, a))));
  }
  return res;
}

double fvu(const Matrix& a, const Matrix& reconstruction) {
  if (!a.same_shape(reconstruction)) throw ShapeError("fvu: shapes differ");
  std::vector<double> mean(std::size_t(a.cols), 0.0);
  for (int r = 0; r < a.rows; ++r) {
    const float* row = a.row(r);
    for (int c = 0; c < a.cols; ++c) mean[std::size_t(c)] += double(row[c]);
  }
  for (auto& m : mean) m /= double(a.rows);

  double num = 0.0, den = 0.0;
  for (int r = 0; r < a.rows; ++r) {
    for (int c = 0; c < a.cols; ++c) {
      const double d = double(a(r, c)) - double(reconstruction(r, c));
      num += d * d;
      const double v = double(a(r, c)) - mean[std::size_t(c)];
      den += v * v;
    }
  }
  if (den == 0.0) throw DomainError("fvu: input has zero variance");
  return num / den;
}

}  // namespace sclab
