#include "sclab/model.hpp"

#include <algorithm>

#include "sclab/loss.hpp"

namespace sclab {

HeadMode HeadMode::parse(const std::string& s) {
  if (s == "linear") return linear();
  if (s == "relu") return relu();
  if (s.rfind("topk", 0) == 0) {
    const std::string num = s.substr(4);
    if (num.empty()) throw ConfigError("HeadMode: topk needs a count, e.g. topk64");
    return topk(std::stoi(num));
  }
  throw ConfigError("HeadMode: unknown mode '" + s + "' (expected linear|relu|topkN)");
}

void ModelConfig::validate() const {
  if (image_input_dim < 1 || text_input_dim < 1) throw ConfigError("ModelConfig: input dims must be >= 1");
  if (hidden_dims.empty()) throw ConfigError("ModelConfig: at least one hidden layer required");
  for (int d : hidden_dims) {
    if (d < 1) throw ConfigError("ModelConfig: hidden dims must be >= 1");
  }
  if (expansion_factor < 1) throw ConfigError("ModelConfig: expansion_factor must be >= 1");
  if (logit_scale_cap <= 0.f) throw ConfigError("ModelConfig: logit_scale_cap must be > 0");
  if (head_mode.kind == HeadMode::TopK && (head_mode.k < 1 || head_mode.k > embed_dim())) {
    throw ConfigError("ModelConfig: TopK k must be in [1, embed_dim]");
  }
}

namespace {

TowerParams init_tower(int input_dim, const std::vector<int>& hidden_dims, int embed_dim,
                       HeadMode head, Rng& rng) {
  TowerParams t;
  t.head_mode = head;
  int in = input_dim;
  for (int out : hidden_dims) {
    DenseLayerT<float> layer;
    layer.weight = rng.gaussian(in, out, 0.f, 1.f / std::sqrt(float(in)));
    layer.bias.assign(std::size_t(out), 0.f);
    t.layers.push_back(std::move(layer));
    in = out;
  }
  t.proj_weight = rng.gaussian(in, embed_dim, 0.f, 1.f / std::sqrt(float(in)));
  t.proj_bias.assign(std::size_t(embed_dim), 0.f);
  return t;
}

}  // namespace

ModelParams init_params(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  Rng root(seed);
  Rng img_rng = root.derive(1);
  Rng txt_rng = root.derive(2);

  ModelParams p;
  p.image_tower = init_tower(cfg.image_input_dim, cfg.hidden_dims, cfg.embed_dim(), cfg.head_mode, img_rng);
  p.text_tower = init_tower(cfg.text_input_dim, cfg.hidden_dims, cfg.embed_dim(), cfg.head_mode, txt_rng);
  p.logit_scale_cap = cfg.logit_scale_cap;
  p.log_logit_scale = std::min(std::log(1.f / 0.07f), std::log(cfg.logit_scale_cap));
  return p;
}

namespace {

// One finite-difference probe against the analytic gradient.
struct GradProbe {
  ModelParamsT<double>* params;
  const Mat<double>* img;
  const Mat<double>* txt;
  double eps;
  double worst = 0.0;

  double loss() const { return contrastive_objective(*params, *img, *txt, 0.0).loss; }

  void check(double* p, double analytic) {
    const double orig = *p;
    *p = orig + eps;
    const double lp = loss();
    *p = orig - eps;
    const double lm = loss();
    *p = orig;
    const double fd = (lp - lm) / (2.0 * eps);
    const double rel = std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-8});
    worst = std::max(worst, rel);
  }
};

void probe_block(GradProbe& probe, Rng& rng, int samples, std::vector<double>& w,
                 const std::vector<double>& g) {
  const int n = int(w.size());
  const int take = std::min(samples, n);
  for (int s = 0; s < take; ++s) {
    const int i = take == n ? s : rng.randint(n);
    probe.check(&w[std::size_t(i)], g[std::size_t(i)]);
  }
}

void probe_block(GradProbe& probe, Rng& rng, int samples, Mat<double>& w, const Mat<double>& g) {
  const int n = int(w.size());
  const int take = std::min(samples, n);
  for (int s = 0; s < take; ++s) {
    const int i = take == n ? s : rng.randint(n);
    probe.check(&w.data[std::size_t(i)], g.data[std::size_t(i)]);
  }
}

}  // namespace

double grad_check(const ModelParams& params, const Matrix& image_inputs, const Matrix& text_inputs,
                  double eps, int samples_per_block, uint64_t seed) {
  ModelParamsT<double> p = params.cast<double>();
  // Revisions restart at the cast copy; encode/backward pairs stay matched.
  const Mat<double> img = image_inputs.cast<double>();
  const Mat<double> txt = text_inputs.cast<double>();

  // The L1 term is excluded: its |.| kink sits exactly at the zeros a ReLU
  // head produces, where central differences are meaningless.
  const auto res = contrastive_objective(p, img, txt, 0.0);

  GradProbe probe{&p, &img, &txt, eps};
  Rng rng(Rng::splitmix64(seed ^ 0x67726164ULL));

  auto probe_tower = [&](TowerParamsT<double>& tower, const TowerGradsT<double>& grads) {
    for (std::size_t li = 0; li < tower.layers.size(); ++li) {
      probe_block(probe, rng, samples_per_block, tower.layers[li].weight, grads.layers[li].weight);
      probe_block(probe, rng, samples_per_block, tower.layers[li].bias, grads.layers[li].bias);
    }
    probe_block(probe, rng, samples_per_block, tower.proj_weight, grads.proj_weight);
    probe_block(probe, rng, samples_per_block, tower.proj_bias, grads.proj_bias);
  };
  probe_tower(p.image_tower, res.image_grads);
  probe_tower(p.text_tower, res.text_grads);
  probe.check(&p.log_logit_scale, res.grad_log_scale);
  return probe.worst;
}

void jitter_relu_biases(ModelParams& params, const Matrix& image_inputs, const Matrix& text_inputs,
                        float margin) {
  auto fix_tower = [&](TowerParams& tower, const Matrix& inputs) {
    for (int round = 0; round < 50; ++round) {
      TowerCache cache;
      encode(tower, inputs, &cache);
      bool dirty = false;
      auto nudge = [&](const Matrix& pre, std::vector<float>& bias) {
        for (int c = 0; c < pre.cols; ++c) {
          for (int r = 0; r < pre.rows; ++r) {
            if (std::abs(pre(r, c)) < margin) {
              bias[std::size_t(c)] += 2.5f * margin;
              dirty = true;
              break;
            }
          }
        }
      };
      for (std::size_t li = 0; li < tower.layers.size(); ++li) {
        nudge(cache.hidden_pre[li], tower.layers[li].bias);
      }
      if (tower.head_mode.kind == HeadMode::ReLU) nudge(cache.head_pre, tower.proj_bias);
      if (!dirty) return;
    }
  };
  fix_tower(params.image_tower, image_inputs);
  fix_tower(params.text_tower, text_inputs);
  params.bump_revision();
}

}  // namespace sclab
