#pragma once

#include <optional>
#include <vector>

#include "sclab/cache.hpp"
#include "sclab/mat.hpp"
#include "sclab/model.hpp"
#include "sclab/synth.hpp"

namespace sclab {

struct ClarityConfig {
  float tau = 0.001f;
  int n_min = 2;

  void validate() const {
    if (tau < 0.f) throw ConfigError("ClarityConfig: tau must be >= 0");
    if (n_min < 2) throw ConfigError("ClarityConfig: n_min must be >= 2");
  }
};

// Per-feature lists of (sample id, activation) with activation > tau.
struct FeatureActivationIndex {
  int n_features = 0;
  int n_samples = 0;
  float tau = 0.f;
  std::vector<std::vector<std::pair<int, float>>> by_feature;

  static FeatureActivationIndex build(const std::vector<ActivationRecord>& records,
                                      int n_features, float tau);
};

struct ModalityStat {
  int feature_id = 0;
  float modality_score = 0.f;     // image share of activation mass, in [0,1]
  float activation_density = 0.f; // total mass / pool sample count
};

// Mean over samples of count(|value| > tau); empty input gives 0.
float mean_l0(const std::vector<ActivationRecord>& records, float tau);
float mean_l0(const Matrix& acts, float tau);

// Share of features activating at least n_min samples.
float active_feature_fraction(const FeatureActivationIndex& index, int n_min, int total_features);

// Mean pairwise cosine similarity of reference embeddings across the samples
// activating each feature, averaged over features with >= n_min activators.
// No active features is an explicit N/A, never a silent zero.
std::optional<float> clarity(const FeatureActivationIndex& index, const Matrix& ref_embed,
                             const ClarityConfig& cfg);

// Per-feature image/text activation mass split; zero-mass features omitted.
std::vector<ModalityStat> modality_stats(const Matrix& acts_img, const Matrix& acts_txt, float tau);

// Labels classified by max cosine between image embeddings and the label
// words' text embeddings; ties resolve to the lowest class index.
float zero_shot_accuracy(const ModelParams& params, const SyntheticWorld& world,
                         const PairBatch& eval_images);

struct RetrievalResult {
  float image_at_k = 0.f;  // text query -> retrieve image
  float text_at_k = 0.f;   // image query -> retrieve text
};

RetrievalResult retrieval_at_k(const ModelParams& params, const PairBatch& pairs, int k);

}  // namespace sclab
