#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sclab/mat.hpp"
#include "sclab/model.hpp"
#include "sclab/synth.hpp"

namespace sclab {

// Activation overwrites, applied in order (later entries win on collision).
struct SteeringSpec {
  std::vector<std::pair<int, float>> interventions;  // (feature id, new value)
};

struct ConceptFeatures {
  std::vector<std::pair<int, float>> features;  // (id, activation), desc by value
  bool all_zero = false;  // the word's encoding never activated anything
};

// Top-k activated features of a concept word through the text tower; ties
// break toward the lower index.
ConceptFeatures concept_top_features(const ModelParams& params, const SyntheticWorld& world,
                                     int word_index, int k);

// Overwrites listed features, leaves the rest untouched.
std::vector<float> apply_steering(const std::vector<float>& acts, const SteeringSpec& spec);

struct SteeringTrial {
  int sample_id = 0;
  int true_concept = 0;
  int target_concept = 0;
  float sim_truth_before = 0.f;
  float sim_truth_after = 0.f;
  float sim_target_before = 0.f;
  float sim_target_after = 0.f;
};

struct SteeringOutcome {
  std::vector<SteeringTrial> trials;
  float mean_sim_truth_before = 0.f;
  float mean_sim_truth_after = 0.f;
  float mean_sim_target_before = 0.f;
  float mean_sim_target_after = 0.f;
  int truth_decreased_count = 0;   // trials where sim to truth fell
  int target_increased_count = 0;  // trials where sim to target rose
};

struct SteeringEvalConfig {
  int k = 1;            // features steered per concept
  float ss = 2.f;       // boost value (steering strength)
  int n_trials = 500;
  uint64_t seed = 1;
  bool suppress = true;  // zero the true concept's top features
  bool boost = true;     // set the alternative's top features to ss
};

// Per trial: suppress the truth label's top-k features to 0 and boost a
// random alternative label's top-k to ss inside the image's sparse
// activation, then compare re-normalized cosine similarity to both labels'
// text embeddings before vs after.
SteeringOutcome steering_eval(const ModelParams& params, const SyntheticWorld& world,
                              const PairBatch& eval_images, const SteeringEvalConfig& cfg);

// One-sided sign-test p-value: P[Binomial(n, 1/2) >= k].
double binomial_sign_test(int successes, int n);

}  // namespace sclab
