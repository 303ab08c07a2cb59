#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "sclab/atlas.hpp"
#include "sclab/checkpoint.hpp"
#include "sclab/ops.hpp"
#include "sclab/rng.hpp"
#include "sclab/train.hpp"

using namespace sclab;

namespace {

WorldConfig atlas_world_cfg() {
  WorldConfig wc;
  wc.n_concepts = 6;
  wc.latent_dim = 6;
  wc.image_input_dim = 12;
  wc.text_input_dim = 10;
  wc.noise_sigma = 0.02f;
  wc.words_per_concept = 3;
  wc.seed = 808;
  return wc;
}

ModelConfig atlas_model_cfg(const SyntheticWorld& w) {
  ModelConfig mc;
  mc.image_input_dim = w.image_input_dim;
  mc.text_input_dim = w.text_input_dim;
  mc.hidden_dims = {8};
  mc.expansion_factor = 4;
  mc.head_mode = HeadMode::relu();
  return mc;
}

}  // namespace

TEST_CASE("atlas ranks match an exhaustive sort oracle on a 50-sample pool") {
  SyntheticWorld world = gen_world(atlas_world_cfg());
  ModelParams params = init_params(atlas_model_cfg(world), 5);
  PairBatch pool = sample_batch(world, 50, 1, 77);
  AtlasConfig cfg;
  cfg.k = 7;
  cfg.tau = 0.001f;
  FeatureAtlas atlas = build_atlas(params, world, pool, cfg);

  const Matrix img_acts = encode(params.image_tower, pool.image_inputs);
  const Matrix word_acts = encode(params.text_tower, world.all_word_inputs());
  for (const auto& entry : atlas.features) {
    // oracle: full sort of the column, filtered by tau
    std::vector<std::pair<float, int>> col;
    for (int s = 0; s < img_acts.rows; ++s) {
      if (img_acts(s, entry.feature_id) > cfg.tau) col.push_back({img_acts(s, entry.feature_id), s});
    }
    std::stable_sort(col.begin(), col.end(), [](auto a, auto b) { return a.first > b.first; });
    REQUIRE(entry.top_images.size() == std::min<std::size_t>(col.size(), 7));
    for (std::size_t i = 0; i < entry.top_images.size(); ++i) {
      CHECK(entry.top_images[i].sample_id == col[i].second);
      CHECK(entry.top_images[i].activation == col[i].first);
    }
    for (std::size_t i = 1; i < entry.top_words.size(); ++i) {
      CHECK(entry.top_words[i].activation <= entry.top_words[i - 1].activation);
    }
    // unlabeled features have no entries above tau anywhere
    if (!entry.labeled) {
      for (int s = 0; s < img_acts.rows; ++s) CHECK(img_acts(s, entry.feature_id) <= cfg.tau);
      for (int w = 0; w < word_acts.rows; ++w) CHECK(word_acts(w, entry.feature_id) <= cfg.tau);
    }
  }
}

TEST_CASE("atlas marks silent features unlabeled and truncates k to pool size") {
  SyntheticWorld world = gen_world(atlas_world_cfg());
  ModelParams params = init_params(atlas_model_cfg(world), 6);
  // zero a feature by pinning its projection column and bias very negative
  const int dead = 3;
  for (int r = 0; r < params.image_tower.proj_weight.rows; ++r) {
    params.image_tower.proj_weight(r, dead) = 0.f;
  }
  for (int r = 0; r < params.text_tower.proj_weight.rows; ++r) {
    params.text_tower.proj_weight(r, dead) = 0.f;
  }
  params.image_tower.proj_bias[dead] = -10.f;
  params.text_tower.proj_bias[dead] = -10.f;

  PairBatch pool = sample_batch(world, 5, 1, 78);
  AtlasConfig cfg;
  cfg.k = 50;  // larger than both pools
  FeatureAtlas atlas = build_atlas(params, world, pool, cfg);
  CHECK(!atlas.features[dead].labeled);
  CHECK(atlas.features[dead].top_words.empty());
  for (const auto& entry : atlas.features) {
    CHECK(entry.top_images.size() <= 5);
    CHECK(entry.top_words.size() <= std::size_t(world.n_words()));
  }
}

TEST_CASE("atlas deterministic for fixed checkpoint and pools") {
  SyntheticWorld world = gen_world(atlas_world_cfg());
  ModelParams params = init_params(atlas_model_cfg(world), 7);
  PairBatch pool = sample_batch(world, 30, 1, 79);
  AtlasConfig cfg;
  FeatureAtlas a = build_atlas(params, world, pool, cfg);
  FeatureAtlas b = build_atlas(params, world, pool, cfg);
  REQUIRE(a.features.size() == b.features.size());
  for (std::size_t i = 0; i < a.features.size(); ++i) {
    CHECK(a.features[i].labeled == b.features[i].labeled);
    REQUIRE(a.features[i].top_words.size() == b.features[i].top_words.size());
    for (std::size_t j = 0; j < a.features[i].top_words.size(); ++j) {
      CHECK(a.features[i].top_words[j].word == b.features[i].top_words[j].word);
      CHECK(a.features[i].top_words[j].activation == b.features[i].top_words[j].activation);
    }
  }
}

TEST_CASE("concept alignment on hand-built atlases") {
  SyntheticWorld world = gen_world(atlas_world_cfg());
  PairBatch pool = sample_batch(world, 20, 1, 80);

  FeatureAtlas aligned;
  FeatureAtlas disjoint;
  for (int f = 0; f < 4; ++f) {
    FeatureEntry e;
    e.feature_id = f;
    e.labeled = true;
    // top word of concept c, top images all of concept c
    const int c = pool.primary_concept(f);
    e.top_words.push_back({world.vocabulary[std::size_t(world.label_word_index(c))].first,
                           world.label_word_index(c), 1.f});
    e.top_images.push_back({f, 1.f});
    aligned.features.push_back(e);

    // word from a different concept than every image
    FeatureEntry d = e;
    const int other = (c + 1) % world.n_concepts;
    d.top_words[0] = {world.vocabulary[std::size_t(world.label_word_index(other))].first,
                      world.label_word_index(other), 1.f};
    disjoint.features.push_back(d);
  }
  CHECK(concept_alignment_score(aligned, world, pool) == 1.f);
  CHECK(concept_alignment_score(disjoint, world, pool) == 0.f);
  CHECK(concept_alignment_score(FeatureAtlas{}, world, pool) == 0.f);
}

TEST_CASE("alignment score stays within [0,1] on a trained model") {
  SyntheticWorld world = gen_world(atlas_world_cfg());
  TrainConfig tc;
  tc.epochs = 4;
  tc.batch_size = 64;
  tc.dataset_size = 512;
  tc.mixing = 1;
  tc.hidden_dims = {8};
  tc.expansion_factor = 4;
  tc.seed = 31;
  TrainResult r = train(world, tc);
  PairBatch pool = sample_batch(world, 64, 1, 81);
  const float score = concept_alignment_score(build_atlas(r.params, world, pool, {}), world, pool);
  CHECK(score >= 0.f);
  CHECK(score <= 1.f);
}

TEST_CASE("evolution traces: identical checkpoints give identical snapshots") {
  SyntheticWorld world = gen_world(atlas_world_cfg());
  ModelConfig mc = atlas_model_cfg(world);
  ModelParams params = init_params(mc, 9);
  const auto dir = std::filesystem::temp_directory_path() / "sclab_atlas_evo";
  std::filesystem::create_directories(dir);
  const std::string p1 = (dir / "c1.sckpt").string();
  const std::string p2 = (dir / "c2.sckpt").string();
  save_model_checkpoint(p1, params, mc, 0.01);
  save_model_checkpoint(p2, params, mc, 1.0);

  PairBatch pool = sample_batch(world, 40, 1, 82);
  std::vector<int> features = {0, 1, 2, 5};
  auto traces = evolution_trace({p1, p2}, features, world, pool, {});
  REQUIRE(traces.size() == 4);
  for (const auto& t : traces) {
    REQUIRE(t.snapshots.size() == 2);  // exactly one snapshot per checkpoint
    CHECK(t.snapshots[0].fraction == 0.01);
    CHECK(t.snapshots[1].fraction == 1.0);
    REQUIRE(t.snapshots[0].top_words.size() == t.snapshots[1].top_words.size());
    for (std::size_t i = 0; i < t.snapshots[0].top_words.size(); ++i) {
      CHECK(t.snapshots[0].top_words[i].word == t.snapshots[1].top_words[i].word);
      CHECK(t.snapshots[0].top_words[i].activation == t.snapshots[1].top_words[i].activation);
    }
    // normalized activations live in [0,1]
    for (const auto& snap : t.snapshots) {
      for (const auto& w : snap.top_words) {
        CHECK(w.activation >= 0.f);
        CHECK(w.activation <= 1.f + 1e-6f);
      }
      for (const auto& im : snap.top_images) {
        CHECK(im.activation >= 0.f);
        CHECK(im.activation <= 1.f + 1e-6f);
      }
    }
  }
  // churn of identical snapshots is zero
  for (double c : trace_word_churn(traces)) CHECK(c == 0.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("evolution_trace requires two checkpoints") {
  SyntheticWorld world = gen_world(atlas_world_cfg());
  PairBatch pool = sample_batch(world, 10, 1, 83);
  CHECK_THROWS_AS(evolution_trace({"only_one.sckpt"}, {0}, world, pool, {}), ConfigError);
}

TEST_CASE("jaccard distance matches set arithmetic oracle") {
  std::set<std::string> a = {"dog", "rose", "hip"};
  std::set<std::string> b = {"rose", "hip", "fruit", "red"};
  // intersection 2, union 5
  CHECK(jaccard_distance(a, b) == doctest::Approx(1.0 - 2.0 / 5.0));
  CHECK(jaccard_distance(a, a) == 0.0);
  CHECK(jaccard_distance({}, {}) == 0.0);
  CHECK(jaccard_distance(a, {}) == 1.0);
}
