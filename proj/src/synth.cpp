#include "sclab/synth.hpp"

#include <algorithm>

#include "sclab/errors.hpp"
#include "sclab/ops.hpp"

namespace sclab {

namespace {

// Substream ids for Rng::derive.
enum : uint64_t {
  kStreamConcepts = 1,
  kStreamImageMap = 2,
  kStreamTextMap = 3,
  kStreamWords = 4,
};

const char* kSyllables[] = {"ba", "ke", "di", "mo", "ra", "su", "ne", "lo",
                            "ti", "vu", "za", "po", "fi", "gu", "hy", "wa"};
constexpr int kNumSyllables = 16;

std::string make_word(Rng& rng) {
  const int n = 2 + rng.randint(2);
  std::string w;
  for (int i = 0; i < n; ++i) w += kSyllables[rng.randint(kNumSyllables)];
  return w;
}

void normalize_rows_inplace(Matrix& m) {
  for (int r = 0; r < m.rows; ++r) {
    const double norm = row_norm(m, r);
    if (norm == 0.0) continue;
    float* row = m.row(r);
    for (int c = 0; c < m.cols; ++c) row[c] = float(double(row[c]) / norm);
  }
}

}  // namespace

Matrix SyntheticWorld::text_input_for_word(int word_index) const {
  if (word_index < 0 || word_index >= n_words()) {
    throw ConfigError("text_input_for_word: word index out of range");
  }
  Matrix latent(1, latent_dim);
  for (int c = 0; c < latent_dim; ++c) latent(0, c) = word_latents(word_index, c);
  return matmul(latent, text_map);
}

Matrix SyntheticWorld::text_inputs_for_words(const std::vector<int>& word_indices) const {
  Matrix latents(int(word_indices.size()), latent_dim);
  for (int i = 0; i < int(word_indices.size()); ++i) {
    const int w = word_indices[std::size_t(i)];
    if (w < 0 || w >= n_words()) throw ConfigError("text_inputs_for_words: word index out of range");
    for (int c = 0; c < latent_dim; ++c) latents(i, c) = word_latents(w, c);
  }
  return matmul(latents, text_map);
}

Matrix SyntheticWorld::all_word_inputs() const {
  std::vector<int> idx(static_cast<std::size_t>(n_words()));
  for (int i = 0; i < n_words(); ++i) idx[std::size_t(i)] = i;
  return text_inputs_for_words(idx);
}

int SyntheticWorld::label_word_index(int concept_id) const {
  for (int i = 0; i < n_words(); ++i) {
    if (vocabulary[std::size_t(i)].second == concept_id) return i;
  }
  throw ConfigError("label_word_index: concept has no vocabulary entry");
}

SyntheticWorld gen_world(const WorldConfig& cfg) {
  if (cfg.n_concepts < 2) throw ConfigError("gen_world: need at least 2 concepts");
  if (cfg.latent_dim < 1 || cfg.latent_dim > std::min(cfg.image_input_dim, cfg.text_input_dim)) {
    throw ConfigError("gen_world: latent_dim must be in [1, min(input dims)]");
  }
  if (cfg.words_per_concept < 1) throw ConfigError("gen_world: words_per_concept must be >= 1");
  if (cfg.noise_sigma < 0.f) throw ConfigError("gen_world: noise_sigma must be >= 0");

  Rng root(cfg.seed);

  SyntheticWorld w;
  w.n_concepts = cfg.n_concepts;
  w.latent_dim = cfg.latent_dim;
  w.image_input_dim = cfg.image_input_dim;
  w.text_input_dim = cfg.text_input_dim;
  w.noise_sigma = cfg.noise_sigma;
  w.seed = cfg.seed;

  Rng crng = root.derive(kStreamConcepts);
  w.concept_vectors = crng.gaussian(cfg.n_concepts, cfg.latent_dim, 0.f, 1.f);
  normalize_rows_inplace(w.concept_vectors);

  // Observation maps scaled so mapped unit latents have O(1/sqrt(L)) per-dim
  // spread; full rank holds almost surely for gaussian entries.
  const float map_std = 1.f / std::sqrt(float(cfg.latent_dim));
  Rng irng = root.derive(kStreamImageMap);
  w.image_map = irng.gaussian(cfg.latent_dim, cfg.image_input_dim, 0.f, map_std);
  Rng trng = root.derive(kStreamTextMap);
  w.text_map = trng.gaussian(cfg.latent_dim, cfg.text_input_dim, 0.f, map_std);

  Rng wrng = root.derive(kStreamWords);
  w.word_latents = Matrix(cfg.n_concepts * cfg.words_per_concept, cfg.latent_dim);
  for (int c = 0; c < cfg.n_concepts; ++c) {
    for (int k = 0; k < cfg.words_per_concept; ++k) {
      std::string word = make_word(wrng);
      // Disambiguate collisions; synthetic words need not be pretty.
      word += "_" + std::to_string(c) + std::to_string(k);
      w.vocabulary.emplace_back(word, c);
      const int row = c * cfg.words_per_concept + k;
      for (int d = 0; d < cfg.latent_dim; ++d) {
        w.word_latents(row, d) =
            w.concept_vectors(c, d) + cfg.word_jitter * float(wrng.normal());
      }
    }
  }
  normalize_rows_inplace(w.word_latents);

  w.class_labels.resize(std::size_t(cfg.n_concepts));
  for (int c = 0; c < cfg.n_concepts; ++c) w.class_labels[std::size_t(c)] = c;
  return w;
}

PairBatch sample_batch(const SyntheticWorld& world, int n, int mixing, uint64_t seed) {
  if (n < 1) throw ConfigError("sample_batch: n must be >= 1");
  if (mixing < 1 || mixing > world.n_concepts) {
    throw ConfigError("sample_batch: mixing must be in [1, n_concepts]");
  }

  Rng rng(seed);
  PairBatch b;
  b.concept_ids.resize(std::size_t(n));
  b.latents = Matrix(n, world.latent_dim);
  b.image_latents = Matrix(n, world.latent_dim);
  b.text_latents = Matrix(n, world.latent_dim);

  for (int i = 0; i < n; ++i) {
    const int count = 1 + rng.randint(mixing);
    auto& ids = b.concept_ids[std::size_t(i)];
    while (int(ids.size()) < count) {
      const int c = rng.randint(world.n_concepts);
      if (std::find(ids.begin(), ids.end(), c) == ids.end()) ids.push_back(c);
    }
    for (int c : ids) {
      for (int d = 0; d < world.latent_dim; ++d) {
        b.latents(i, d) += world.concept_vectors(c, d);
      }
    }
    for (int d = 0; d < world.latent_dim; ++d) {
      b.image_latents(i, d) = b.latents(i, d) + world.noise_sigma * float(rng.normal());
    }
    for (int d = 0; d < world.latent_dim; ++d) {
      b.text_latents(i, d) = b.latents(i, d) + world.noise_sigma * float(rng.normal());
    }
  }

  b.image_inputs = matmul(b.image_latents, world.image_map);
  b.text_inputs = matmul(b.text_latents, world.text_map);
  return b;
}

Matrix reference_embeddings(const PairBatch& batch) {
  return l2_normalize_rows(batch.latents, 1e-12f);
}

}  // namespace sclab
