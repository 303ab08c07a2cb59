#pragma once

#include <optional>
#include <string>

#include "sclab/csv.hpp"
#include "sclab/metrics.hpp"
#include "sclab/model.hpp"
#include "sclab/synth.hpp"

namespace sclab {

// Shared evaluation harness: fixed seeded pools, one report per model.
struct EvalConfig {
  int n_eval_images = 512;
  int n_retrieval_pairs = 256;
  float tau = 0.001f;
  int n_min = 2;
  uint64_t eval_seed = 20240501;

  // multimodal band for the modality-score histogram
  float band_lo = 0.2f;
  float band_hi = 0.8f;
};

struct MetricsReport {
  float l0 = 0.f;               // mean over image and text eval activations
  float l0_images = 0.f;
  float l0_texts = 0.f;
  float active_fraction = 0.f;  // image-side index, n_min threshold
  std::optional<float> clarity;
  float zero_shot_acc = 0.f;
  float ir_at_1 = 0.f, ir_at_5 = 0.f;
  float tr_at_1 = 0.f, tr_at_5 = 0.f;
  int modality_features = 0;        // features with any activation mass
  float multimodal_band_frac = 0.f; // share of those inside [band_lo, band_hi]
  std::vector<ModalityStat> modality;
};

// Pools derive deterministically from (world, cfg.eval_seed).
MetricsReport evaluate_model(const ModelParams& params, const SyntheticWorld& world,
                             const EvalConfig& cfg);

// Single-row table; always contains l0, active_fraction, clarity,
// zero_shot_acc (clarity may be "NA").
CsvTable metrics_csv(const MetricsReport& report);

PairBatch eval_image_pool(const SyntheticWorld& world, const EvalConfig& cfg);

}  // namespace sclab
