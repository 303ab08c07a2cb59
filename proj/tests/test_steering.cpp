#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "sclab/ops.hpp"
#include "sclab/rng.hpp"
#include "sclab/steering.hpp"
#include "sclab/train.hpp"

using namespace sclab;

namespace {

WorldConfig steer_world_cfg() {
  WorldConfig wc;
  wc.n_concepts = 6;
  wc.latent_dim = 6;
  wc.image_input_dim = 12;
  wc.text_input_dim = 10;
  wc.noise_sigma = 0.02f;
  wc.seed = 909;
  return wc;
}

ModelConfig steer_model_cfg(const SyntheticWorld& w) {
  ModelConfig mc;
  mc.image_input_dim = w.image_input_dim;
  mc.text_input_dim = w.text_input_dim;
  mc.hidden_dims = {8};
  mc.expansion_factor = 4;
  mc.head_mode = HeadMode::relu();
  return mc;
}

}  // namespace

TEST_CASE("concept_top_features k=1 returns the argmax feature") {
  SyntheticWorld world = gen_world(steer_world_cfg());
  ModelParams params = init_params(steer_model_cfg(world), 3);
  const Matrix acts = encode(params.text_tower, world.text_input_for_word(0));
  int argmax = 0;
  for (int f = 1; f < acts.cols; ++f) {
    if (acts(0, f) > acts(0, argmax)) argmax = f;
  }
  ConceptFeatures top = concept_top_features(params, world, 0, 1);
  REQUIRE(top.features.size() == 1);
  CHECK(top.features[0].first == argmax);
  CHECK(!top.all_zero);
}

TEST_CASE("concept_top_features matches a full sort oracle") {
  SyntheticWorld world = gen_world(steer_world_cfg());
  ModelParams params = init_params(steer_model_cfg(world), 4);
  const Matrix acts = encode(params.text_tower, world.text_input_for_word(2));
  std::vector<int> idx(std::size_t(acts.cols));
  for (int i = 0; i < acts.cols; ++i) idx[std::size_t(i)] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return acts(0, a) > acts(0, b); });
  ConceptFeatures top = concept_top_features(params, world, 2, 5);
  REQUIRE(top.features.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(top.features[std::size_t(i)].first == idx[std::size_t(i)]);
    CHECK(top.features[std::size_t(i)].second == acts(0, idx[std::size_t(i)]));
  }
}

TEST_CASE("concept_top_features at k=embed_dim returns every feature") {
  SyntheticWorld world = gen_world(steer_world_cfg());
  ModelParams params = init_params(steer_model_cfg(world), 5);
  const int embed = params.embed_dim();
  ConceptFeatures top = concept_top_features(params, world, 1, embed);
  CHECK(int(top.features.size()) == embed);
}

TEST_CASE("concept_top_features flags an all-zero encoding") {
  SyntheticWorld world = gen_world(steer_world_cfg());
  ModelParams params = init_params(steer_model_cfg(world), 6);
  for (auto& b : params.text_tower.proj_bias) b = -100.f;  // ReLU kills everything
  ConceptFeatures top = concept_top_features(params, world, 0, 3);
  CHECK(top.all_zero);
  CHECK(top.features.empty());
}

TEST_CASE("apply_steering identity on empty spec") {
  std::vector<float> acts = {1.f, 2.f, 3.f};
  CHECK(apply_steering(acts, {}) == acts);
}

TEST_CASE("apply_steering zeroes exactly the listed feature") {
  std::vector<float> acts = {1.f, 2.f, 3.f};
  SteeringSpec spec;
  spec.interventions = {{1, 0.f}};
  auto out = apply_steering(acts, spec);
  CHECK(out[0] == 1.f);
  CHECK(out[1] == 0.f);
  CHECK(out[2] == 3.f);
}

TEST_CASE("apply_steering idempotent (overwrite semantics)") {
  std::vector<float> acts = {0.5f, 1.5f, 2.5f, 3.5f};
  SteeringSpec spec;
  spec.interventions = {{0, 2.f}, {3, 0.f}};
  auto once = apply_steering(acts, spec);
  auto twice = apply_steering(once, spec);
  CHECK(once == twice);
}

TEST_CASE("apply_steering touches at most |spec| coordinates") {
  Rng rng(11);
  std::vector<float> acts(32);
  for (auto& v : acts) v = float(rng.normal());
  SteeringSpec spec;
  spec.interventions = {{3, 0.f}, {17, 2.f}, {20, 0.f}};
  auto out = apply_steering(acts, spec);
  int touched = 0;
  for (std::size_t i = 0; i < acts.size(); ++i) touched += out[i] != acts[i];
  CHECK(touched <= 3);
}

TEST_CASE("suppression only removes L1 mass") {
  Rng rng(13);
  std::vector<float> acts(16);
  for (auto& v : acts) v = std::abs(float(rng.normal()));
  SteeringSpec spec;
  spec.interventions = {{2, 0.f}, {9, 0.f}};
  auto out = apply_steering(acts, spec);
  double before = 0, after = 0;
  for (float v : acts) before += std::abs(v);
  for (float v : out) after += std::abs(v);
  CHECK(after <= before);
}

TEST_CASE("apply_steering rejects out-of-range ids") {
  std::vector<float> acts = {1.f};
  SteeringSpec spec;
  spec.interventions = {{5, 0.f}};
  CHECK_THROWS_AS(apply_steering(acts, spec), DomainError);
}

TEST_CASE("steering_eval with k=0 and ss=0 changes nothing") {
  SyntheticWorld world = gen_world(steer_world_cfg());
  ModelParams params = init_params(steer_model_cfg(world), 7);
  PairBatch eval_images = sample_batch(world, 64, 1, 21);
  SteeringEvalConfig cfg;
  cfg.k = 0;
  cfg.ss = 0.f;
  cfg.n_trials = 50;
  SteeringOutcome out = steering_eval(params, world, eval_images, cfg);
  REQUIRE(out.trials.size() == 50);
  for (const auto& t : out.trials) {
    CHECK(t.sim_truth_before == t.sim_truth_after);
    CHECK(t.sim_target_before == t.sim_target_after);
  }
}

TEST_CASE("steering_eval deterministic per seed and similarities bounded") {
  SyntheticWorld world = gen_world(steer_world_cfg());
  ModelParams params = init_params(steer_model_cfg(world), 8);
  PairBatch eval_images = sample_batch(world, 64, 1, 22);
  SteeringEvalConfig cfg;
  cfg.k = 2;
  cfg.ss = 2.f;
  cfg.n_trials = 40;
  cfg.seed = 77;
  SteeringOutcome a = steering_eval(params, world, eval_images, cfg);
  SteeringOutcome b = steering_eval(params, world, eval_images, cfg);
  CHECK(a.mean_sim_truth_after == b.mean_sim_truth_after);
  CHECK(a.truth_decreased_count == b.truth_decreased_count);
  for (const auto& t : a.trials) {
    for (float s : {t.sim_truth_before, t.sim_truth_after, t.sim_target_before, t.sim_target_after}) {
      CHECK(s >= -1.f);
      CHECK(s <= 1.f);
    }
  }
}

TEST_CASE("directional steering on a trained model") {
  SyntheticWorld world = gen_world(steer_world_cfg());
  TrainConfig tc;
  tc.epochs = 12;
  tc.batch_size = 64;
  tc.dataset_size = 1024;
  tc.mixing = 1;
  tc.hidden_dims = {8};
  tc.expansion_factor = 4;
  tc.adam.learning_rate = 2e-3f;
  tc.seed = 99;
  TrainResult r = train(world, tc);
  PairBatch eval_images = sample_batch(world, 256, 1, 23);

  SteeringEvalConfig suppress_only;
  suppress_only.k = 2;
  suppress_only.boost = false;
  suppress_only.n_trials = 200;
  SteeringOutcome s = steering_eval(r.params, world, eval_images, suppress_only);
  CHECK(s.mean_sim_truth_after < s.mean_sim_truth_before);

  SteeringEvalConfig boost_only;
  boost_only.k = 2;
  boost_only.ss = 2.f;
  boost_only.suppress = false;
  boost_only.n_trials = 200;
  SteeringOutcome g = steering_eval(r.params, world, eval_images, boost_only);
  CHECK(g.mean_sim_target_after > g.mean_sim_target_before);
}

TEST_CASE("binomial sign test tail values") {
  CHECK(binomial_sign_test(0, 10) == doctest::Approx(1.0));
  CHECK(binomial_sign_test(10, 10) == doctest::Approx(std::pow(0.5, 10)).epsilon(1e-9));
  // symmetric median: P[X >= 5 | n=9] = 0.5
  CHECK(binomial_sign_test(5, 9) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(binomial_sign_test(400, 500) < 1e-10);
}
