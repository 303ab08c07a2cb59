#pragma once

#include <cstdint>
#include <vector>

#include "sclab/mat.hpp"

namespace sclab {

struct NmfFactors {
  Matrix u;  // n x k, nonnegative
  Matrix v;  // m x k, nonnegative
};

struct NmfResult {
  NmfFactors factors;
  std::vector<double> objective_trace;  // ||A - UV^T||_F^2 per iteration
};

// Multiplicative updates for the Frobenius objective. Strictly positive
// initialization keeps both factors nonnegative with no clipping.
NmfResult nmf(const Matrix& a, int k, int iters, uint64_t seed);

struct SaeParams {
  Matrix enc_weight;             // input_dim x dict_size
  std::vector<float> enc_bias;   // dict_size
  Matrix dec_weight;             // dict_size x input_dim; rows are unit-norm atoms
  std::vector<float> dec_bias;   // input_dim
  int k_active = 0;
};

struct SaeResult {
  SaeParams params;
  std::vector<double> fvu_trace;  // per epoch, on the full input matrix
};

SaeResult sae_train(const Matrix& a, int dict_size, int k_active, int epochs, float lr, uint64_t seed);

// Latent codes (TopK applied) and reconstructions for given inputs.
Matrix sae_encode(const SaeParams& params, const Matrix& a);
Matrix sae_decode(const SaeParams& params, const Matrix& latents);

// ||A - R||_F^2 / ||A - rowmean(A)||_F^2; zero-variance input is an error.
double fvu(const Matrix& a, const Matrix& reconstruction);

}  // namespace sclab
