#include "sclab/steering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sclab/ops.hpp"

namespace sclab {

ConceptFeatures concept_top_features(const ModelParams& params, const SyntheticWorld& world,
                                     int word_index, int k) {
  if (k < 1) throw ConfigError("concept_top_features: k must be >= 1");
  const Matrix acts = encode(params.text_tower, world.text_input_for_word(word_index));
  ConceptFeatures out;
  out.all_zero = true;
  for (int f = 0; f < acts.cols; ++f) out.all_zero &= acts(0, f) == 0.f;
  if (out.all_zero) return out;

  std::vector<int> idx(std::size_t(acts.cols));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return acts(0, a) > acts(0, b); });
  const int take = std::min(k, acts.cols);
  for (int i = 0; i < take; ++i) {
    out.features.emplace_back(idx[std::size_t(i)], acts(0, idx[std::size_t(i)]));
  }
  return out;
}

std::vector<float> apply_steering(const std::vector<float>& acts, const SteeringSpec& spec) {
  std::vector<float> out = acts;
  for (const auto& [f, v] : spec.interventions) {
    if (f < 0 || f >= int(acts.size())) {
      throw DomainError("apply_steering: feature id " + std::to_string(f) + " out of range");
    }
    out[std::size_t(f)] = v;
  }
  return out;
}

namespace {

double cosine(const std::vector<float>& a, const float* b, int n) {
  double dot = 0, na = 0, nb = 0;
  for (int i = 0; i < n; ++i) {
    dot += double(a[std::size_t(i)]) * double(b[i]);
    na += double(a[std::size_t(i)]) * double(a[std::size_t(i)]);
    nb += double(b[i]) * double(b[i]);
  }
  const double denom = std::sqrt(na) * std::sqrt(nb);
  return denom > 0 ? std::clamp(dot / denom, -1.0, 1.0) : 0.0;
}

}  // namespace

SteeringOutcome steering_eval(const ModelParams& params, const SyntheticWorld& world,
                              const PairBatch& eval_images, const SteeringEvalConfig& cfg) {
  if (world.class_labels.size() < 2) throw ConfigError("steering_eval: need at least 2 class labels");
  if (cfg.n_trials < 1) throw ConfigError("steering_eval: n_trials must be >= 1");

  // label word text embeddings, raw, one per class
  std::vector<int> label_words;
  for (int c : world.class_labels) label_words.push_back(world.label_word_index(c));
  const Matrix label_embed = encode(params.text_tower, world.text_inputs_for_words(label_words));

  // top-k feature attribution per class, computed once
  std::vector<SteeringSpec> suppress_spec(world.class_labels.size());
  std::vector<SteeringSpec> boost_spec(world.class_labels.size());
  for (std::size_t ci = 0; ci < world.class_labels.size(); ++ci) {
    if (cfg.k == 0) continue;
    const ConceptFeatures top =
        concept_top_features(params, world, label_words[ci], std::max(cfg.k, 1));
    for (const auto& [f, act] : top.features) {
      suppress_spec[ci].interventions.emplace_back(f, 0.f);
      boost_spec[ci].interventions.emplace_back(f, cfg.ss);
    }
  }

  const Matrix img_embed = encode(params.image_tower, eval_images.image_inputs);

  std::vector<int> class_of(std::size_t(world.n_concepts), -1);
  for (std::size_t ci = 0; ci < world.class_labels.size(); ++ci) {
    class_of[std::size_t(world.class_labels[ci])] = int(ci);
  }

  Rng rng(cfg.seed);
  SteeringOutcome out;
  double sum_tb = 0, sum_ta = 0, sum_gb = 0, sum_ga = 0;
  const int embed_dim = img_embed.cols;
  int produced = 0;
  const int64_t max_attempts = int64_t(cfg.n_trials) * 1000;
  for (int64_t t = 0; produced < cfg.n_trials; ++t) {
    if (t >= max_attempts) {
      throw ConfigError("steering_eval: eval pool has too few images of labeled classes");
    }
    const int sample = rng.randint(eval_images.size());
    const int truth = eval_images.primary_concept(sample);
    const int truth_ci = class_of[std::size_t(truth)];
    if (truth_ci < 0) continue;  // image of a non-class concept
    int target_ci = truth_ci;
    while (target_ci == truth_ci) target_ci = rng.randint(int(world.class_labels.size()));

    std::vector<float> acts(img_embed.row(sample), img_embed.row(sample) + embed_dim);
    std::vector<float> steered = acts;
    // suppression first; a colliding boost wins by running last
    if (cfg.suppress) steered = apply_steering(steered, suppress_spec[std::size_t(truth_ci)]);
    if (cfg.boost) steered = apply_steering(steered, boost_spec[std::size_t(target_ci)]);

    SteeringTrial trial;
    trial.sample_id = sample;
    trial.true_concept = truth;
    trial.target_concept = world.class_labels[std::size_t(target_ci)];
    trial.sim_truth_before = float(cosine(acts, label_embed.row(truth_ci), embed_dim));
    trial.sim_truth_after = float(cosine(steered, label_embed.row(truth_ci), embed_dim));
    trial.sim_target_before = float(cosine(acts, label_embed.row(target_ci), embed_dim));
    trial.sim_target_after = float(cosine(steered, label_embed.row(target_ci), embed_dim));
    out.trials.push_back(trial);

    sum_tb += trial.sim_truth_before;
    sum_ta += trial.sim_truth_after;
    sum_gb += trial.sim_target_before;
    sum_ga += trial.sim_target_after;
    out.truth_decreased_count += trial.sim_truth_after < trial.sim_truth_before;
    out.target_increased_count += trial.sim_target_after > trial.sim_target_before;
    ++produced;
  }
  const double n = double(cfg.n_trials);
  out.mean_sim_truth_before = float(sum_tb / n);
  out.mean_sim_truth_after = float(sum_ta / n);
  out.mean_sim_target_before = float(sum_gb / n);
  out.mean_sim_target_after = float(sum_ga / n);
  return out;
}

double binomial_sign_test(int successes, int n) {
  if (n < 1 || successes < 0 || successes > n) {
    throw ConfigError("binomial_sign_test: invalid counts");
  }
  // sum_{i=k}^{n} C(n,i) / 2^n via log-space terms
  double p = 0.0;
  for (int i = successes; i <= n; ++i) {
    const double log_term = std::lgamma(double(n) + 1) - std::lgamma(double(i) + 1) -
                            std::lgamma(double(n - i) + 1) - double(n) * std::log(2.0);
    p += std::exp(log_term);
  }
  return std::min(p, 1.0);
}

}  // namespace sclab
