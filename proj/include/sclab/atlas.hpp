#pragma once

#include <set>
#include <string>
#include <vector>

#include "sclab/mat.hpp"
#include "sclab/model.hpp"
#include "sclab/synth.hpp"

namespace sclab {

struct RankedWord {
  std::string word;
  int word_index = 0;
  float activation = 0.f;
};

struct RankedImage {
  int sample_id = 0;
  float activation = 0.f;
};

struct FeatureEntry {
  int feature_id = 0;
  bool labeled = false;  // false when no activation ever exceeded tau
  std::vector<RankedWord> top_words;    // nonincreasing activation
  std::vector<RankedImage> top_images;  // nonincreasing activation
};

struct FeatureAtlas {
  double checkpoint_fraction = 1.0;
  float tau = 0.f;
  int k = 0;
  std::vector<FeatureEntry> features;
};

struct AtlasConfig {
  int k = 10;
  float tau = 0.001f;
};

// Encodes every vocabulary word through the text tower and every pool image
// through the image tower, then ranks per feature.
FeatureAtlas build_atlas(const ModelParams& params, const SyntheticWorld& world,
                         const PairBatch& image_pool, const AtlasConfig& cfg,
                         double checkpoint_fraction = 1.0);

// Share of labeled features whose top-1 word concept matches the majority
// concept of their top-k images. Features need both a word and an image
// ranking to count.
float concept_alignment_score(const FeatureAtlas& atlas, const SyntheticWorld& world,
                              const PairBatch& image_pool);

struct EvolutionSnapshot {
  double fraction = 0.0;
  std::vector<RankedWord> top_words;    // activations normalized per checkpoint
  std::vector<RankedImage> top_images;
};

struct EvolutionTrace {
  int feature_id = 0;
  std::vector<EvolutionSnapshot> snapshots;  // ordered by fraction
};

// Restricted atlases for the selected features across checkpoints; each
// snapshot's activations are scaled by that checkpoint's max over the pools.
std::vector<EvolutionTrace> evolution_trace(const std::vector<std::string>& checkpoint_paths,
                                            const std::vector<int>& feature_ids,
                                            const SyntheticWorld& world, const PairBatch& image_pool,
                                            const AtlasConfig& cfg);

// |A xor B| / |A or B|; 0 for two empty sets.
double jaccard_distance(const std::set<std::string>& a, const std::set<std::string>& b);

// Top-word churn between the first and last snapshot of each trace.
std::vector<double> trace_word_churn(const std::vector<EvolutionTrace>& traces);

}  // namespace sclab
