#pragma once

#include <cstdint>
#include <vector>

#include "sclab/errors.hpp"
#include "sclab/loss.hpp"
#include "sclab/model.hpp"

namespace sclab {

struct AdamHyper {
  float learning_rate = 5e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
  float weight_decay = 0.f;  // decoupled; applied only where ParamView.decay
};

// Flat view into one parameter (or gradient) block.
struct ParamView {
  float* data = nullptr;
  std::size_t n = 0;
  bool decay = false;
  float lr_mult = 1.f;
};

struct AdamState {
  int64_t step = 0;
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;

  void init(const std::vector<ParamView>& params) {
    step = 0;
    m.clear();
    v.clear();
    for (const auto& p : params) {
      m.emplace_back(p.n, 0.f);
      v.emplace_back(p.n, 0.f);
    }
  }
};

// Weight matrices decay; biases and the logit scale do not. The logit scale
// learns scale_lr_mult times faster: desk-scale runs are orders of magnitude
// shorter than full pretraining, and the temperature has to traverse the
// same range to make the cap meaningful.
std::vector<ParamView> param_views(ModelParams& params, float scale_lr_mult = 1.f);
std::vector<ParamView> grad_views(ObjectiveResultT<float>& result);

// Bias-corrected Adam with decoupled weight decay.
void adam_step(const std::vector<ParamView>& params, const std::vector<ParamView>& grads,
               AdamState& state, const AdamHyper& hyper);

}  // namespace sclab
