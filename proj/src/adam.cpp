#include "sclab/adam.hpp"

#include <cmath>

namespace sclab {

namespace {

void tower_views(TowerParamsT<float>& t, std::vector<ParamView>& out) {
  for (auto& layer : t.layers) {
    out.push_back({layer.weight.data.data(), layer.weight.size(), true});
    out.push_back({layer.bias.data(), layer.bias.size(), false});
  }
  out.push_back({t.proj_weight.data.data(), t.proj_weight.size(), true});
  out.push_back({t.proj_bias.data(), t.proj_bias.size(), false});
}

void tower_grad_views(TowerGradsT<float>& g, std::vector<ParamView>& out) {
  for (auto& layer : g.layers) {
    out.push_back({layer.weight.data.data(), layer.weight.size(), true});
    out.push_back({layer.bias.data(), layer.bias.size(), false});
  }
  out.push_back({g.proj_weight.data.data(), g.proj_weight.size(), true});
  out.push_back({g.proj_bias.data(), g.proj_bias.size(), false});
}

}  // namespace

std::vector<ParamView> param_views(ModelParams& params, float scale_lr_mult) {
  std::vector<ParamView> out;
  tower_views(params.image_tower, out);
  tower_views(params.text_tower, out);
  out.push_back({&params.log_logit_scale, 1, false, scale_lr_mult});
  return out;
}

std::vector<ParamView> grad_views(ObjectiveResultT<float>& result) {
  std::vector<ParamView> out;
  tower_grad_views(result.image_grads, out);
  tower_grad_views(result.text_grads, out);
  out.push_back({&result.grad_log_scale, 1, false, 1.f});
  return out;
}

void adam_step(const std::vector<ParamView>& params, const std::vector<ParamView>& grads,
               AdamState& state, const AdamHyper& hyper) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ShapeError("adam_step: params/grads/state block counts differ");
  }
  state.step += 1;
  const double b1 = hyper.beta1;
  const double b2 = hyper.beta2;
  const double bc1 = 1.0 - std::pow(b1, double(state.step));
  const double bc2 = 1.0 - std::pow(b2, double(state.step));

  for (std::size_t bi = 0; bi < params.size(); ++bi) {
    if (params[bi].n != grads[bi].n || params[bi].n != state.m[bi].size()) {
      throw ShapeError("adam_step: block size mismatch");
    }
    const double lr = double(hyper.learning_rate) * double(params[bi].lr_mult);
    float* p = params[bi].data;
    const float* g = grads[bi].data;
    float* m = state.m[bi].data();
    float* v = state.v[bi].data();
    const double wd = params[bi].decay ? double(hyper.weight_decay) : 0.0;
    for (std::size_t i = 0; i < params[bi].n; ++i) {
      const double gi = g[i];
      const double mi = b1 * double(m[i]) + (1.0 - b1) * gi;
      const double vi = b2 * double(v[i]) + (1.0 - b2) * gi * gi;
      m[i] = float(mi);
      v[i] = float(vi);
      const double m_hat = mi / bc1;
      const double v_hat = vi / bc2;
      double update = lr * m_hat / (std::sqrt(v_hat) + double(hyper.eps));
      if (wd != 0.0) update += lr * wd * double(p[i]);
      p[i] = float(double(p[i]) - update);
    }
  }
}

}  // namespace sclab
