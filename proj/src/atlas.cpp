#include "sclab/atlas.hpp"

#include <algorithm>
#include <map>

#include "sclab/checkpoint.hpp"
#include "sclab/ops.hpp"

namespace sclab {

namespace {

// indices of the k largest column values, value desc then index asc
template <typename Get>
std::vector<std::pair<int, float>> rank_column(int n, int k, float tau, Get get) {
  std::vector<std::pair<int, float>> above;
  for (int i = 0; i < n; ++i) {
    const float v = get(i);
    if (v > tau) above.emplace_back(i, v);
  }
  std::stable_sort(above.begin(), above.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (int(above.size()) > k) above.resize(std::size_t(k));
  return above;
}

}  // namespace

FeatureAtlas build_atlas(const ModelParams& params, const SyntheticWorld& world,
                         const PairBatch& image_pool, const AtlasConfig& cfg,
                         double checkpoint_fraction) {
  if (cfg.k < 1) throw ConfigError("build_atlas: k must be >= 1");
  if (image_pool.size() < 1 || world.n_words() < 1) throw ConfigError("build_atlas: empty pool");

  const Matrix word_acts = encode(params.text_tower, world.all_word_inputs());
  const Matrix img_acts = encode(params.image_tower, image_pool.image_inputs);

  FeatureAtlas atlas;
  atlas.checkpoint_fraction = checkpoint_fraction;
  atlas.tau = cfg.tau;
  atlas.k = cfg.k;
  atlas.features.resize(std::size_t(params.embed_dim()));
  for (int f = 0; f < params.embed_dim(); ++f) {
    FeatureEntry& entry = atlas.features[std::size_t(f)];
    entry.feature_id = f;
    for (const auto& [w, act] : rank_column(word_acts.rows, cfg.k, cfg.tau,
                                            [&](int i) { return word_acts(i, f); })) {
      entry.top_words.push_back({world.vocabulary[std::size_t(w)].first, w, act});
    }
    for (const auto& [s, act] : rank_column(img_acts.rows, cfg.k, cfg.tau,
                                            [&](int i) { return img_acts(i, f); })) {
      entry.top_images.push_back({s, act});
    }
    entry.labeled = !entry.top_words.empty() || !entry.top_images.empty();
  }
  return atlas;
}

float concept_alignment_score(const FeatureAtlas& atlas, const SyntheticWorld& world,
                              const PairBatch& image_pool) {
  int scored = 0;
  int aligned = 0;
  for (const auto& entry : atlas.features) {
    if (entry.top_words.empty() || entry.top_images.empty()) continue;
    const int word_concept = world.vocabulary[std::size_t(entry.top_words.front().word_index)].second;
    // majority over the primary concepts of the top images; ties -> lowest id
    std::map<int, int> votes;
    for (const auto& img : entry.top_images) {
      ++votes[image_pool.primary_concept(img.sample_id)];
    }
    int best_concept = -1, best_count = 0;
    for (const auto& [cid, count] : votes) {
      if (count > best_count) {
        best_concept = cid;
        best_count = count;
      }
    }
    ++scored;
    aligned += best_concept == word_concept;
  }
  return scored == 0 ? 0.f : float(aligned) / float(scored);
}

std::vector<EvolutionTrace> evolution_trace(const std::vector<std::string>& checkpoint_paths,
                                            const std::vector<int>& feature_ids,
                                            const SyntheticWorld& world, const PairBatch& image_pool,
                                            const AtlasConfig& cfg) {
  if (checkpoint_paths.size() < 2) throw ConfigError("evolution_trace: need at least 2 checkpoints");

  struct Loaded {
    double fraction;
    FeatureAtlas atlas;
  };
  std::vector<Loaded> loaded;
  for (const auto& path : checkpoint_paths) {
    LoadedModel lm = load_model_checkpoint(path);
    loaded.push_back({lm.training_fraction, build_atlas(lm.params, world, image_pool, cfg,
                                                        lm.training_fraction)});
  }
  std::stable_sort(loaded.begin(), loaded.end(),
                   [](const Loaded& a, const Loaded& b) { return a.fraction < b.fraction; });

  std::vector<EvolutionTrace> traces;
  for (int f : feature_ids) {
    EvolutionTrace trace;
    trace.feature_id = f;
    for (const auto& l : loaded) {
      if (f < 0 || f >= int(l.atlas.features.size())) {
        throw ConfigError("evolution_trace: feature id out of range");
      }
      // normalize by this checkpoint's max activation over the traced features
      float max_act = 0.f;
      for (int g : feature_ids) {
        const auto& entry = l.atlas.features[std::size_t(g)];
        if (!entry.top_words.empty()) max_act = std::max(max_act, entry.top_words.front().activation);
        if (!entry.top_images.empty()) max_act = std::max(max_act, entry.top_images.front().activation);
      }
      const float inv = max_act > 0.f ? 1.f / max_act : 0.f;
      EvolutionSnapshot snap;
      snap.fraction = l.fraction;
      for (auto w : l.atlas.features[std::size_t(f)].top_words) {
        w.activation *= inv;
        snap.top_words.push_back(std::move(w));
      }
      for (auto im : l.atlas.features[std::size_t(f)].top_images) {
        im.activation *= inv;
        snap.top_images.push_back(im);
      }
      trace.snapshots.push_back(std::move(snap));
    }
    traces.push_back(std::move(trace));
  }
  return traces;
}

double jaccard_distance(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  int inter = 0;
  for (const auto& x : a) inter += b.count(x) > 0;
  const int uni = int(a.size()) + int(b.size()) - inter;
  return 1.0 - double(inter) / double(uni);
}

std::vector<double> trace_word_churn(const std::vector<EvolutionTrace>& traces) {
  std::vector<double> churn;
  for (const auto& t : traces) {
    if (t.snapshots.size() < 2) {
      churn.push_back(0.0);
      continue;
    }
    std::set<std::string> first, last;
    for (const auto& w : t.snapshots.front().top_words) first.insert(w.word);
    for (const auto& w : t.snapshots.back().top_words) last.insert(w.word);
    churn.push_back(jaccard_distance(first, last));
  }
  return churn;
}

}  // namespace sclab
