#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sclab/mat.hpp"
#include "sclab/rng.hpp"

namespace sclab {

// Latent-concept world with two observation maps. Ground truth is known, so
// clarity / alignment / steering results can be checked against it exactly.
struct SyntheticWorld {
  int n_concepts = 0;
  int latent_dim = 0;
  int image_input_dim = 0;
  int text_input_dim = 0;
  float noise_sigma = 0.f;
  uint64_t seed = 0;

  Matrix concept_vectors;  // n_concepts x latent_dim, unit rows
  Matrix image_map;        // latent_dim x image_input_dim
  Matrix text_map;         // latent_dim x text_input_dim

  // vocabulary[i] = (word, concept id); every concept has >= 1 word. The
  // first word of a concept doubles as its class label prompt.
  std::vector<std::pair<std::string, int>> vocabulary;
  Matrix word_latents;  // n_words x latent_dim, unit rows
  std::vector<int> class_labels;

  int n_words() const { return int(vocabulary.size()); }

  // Canonical (noise-free) text input for one vocabulary entry.
  Matrix text_input_for_word(int word_index) const;
  // Stacked text inputs for all words, or a subset.
  Matrix text_inputs_for_words(const std::vector<int>& word_indices) const;
  Matrix all_word_inputs() const;

  // First vocabulary entry of a concept; used as its zero-shot label word.
  int label_word_index(int concept_id) const;
};

struct WorldConfig {
  int n_concepts = 24;
  int latent_dim = 16;
  int image_input_dim = 48;
  int text_input_dim = 40;
  float noise_sigma = 0.08f;
  int words_per_concept = 4;
  float word_jitter = 0.05f;
  uint64_t seed = 1234;
};

SyntheticWorld gen_world(const WorldConfig& cfg);

// Matched image/text observations of the same latent draws.
struct PairBatch {
  Matrix image_inputs;  // n x image_input_dim
  Matrix text_inputs;   // n x text_input_dim
  std::vector<std::vector<int>> concept_ids;  // 1..mixing concepts per sample
  Matrix latents;       // n x latent_dim, clean sum of concept vectors
  Matrix image_latents; // latent + image-side noise (pre-map)
  Matrix text_latents;  // latent + text-side noise (pre-map)

  int size() const { return image_inputs.rows; }
  int primary_concept(int i) const { return concept_ids[std::size_t(i)][0]; }
};

// Draws n samples; each mixes 1..mixing concepts (uniform count, distinct
// ids) to mimic multi-subject captions. Noise is latent-space gaussian,
// independent per modality, applied before the observation maps.
PairBatch sample_batch(const SyntheticWorld& world, int n, int mixing, uint64_t seed);

// Reference embeddings for clarity: unit-normalized clean latents.
Matrix reference_embeddings(const PairBatch& batch);

}  // namespace sclab
