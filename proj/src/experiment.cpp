#include "sclab/experiment.hpp"

#include "sclab/ops.hpp"
#include "sclab/rng.hpp"

namespace sclab {

PairBatch eval_image_pool(const SyntheticWorld& world, const EvalConfig& cfg) {
  return sample_batch(world, cfg.n_eval_images, 1, Rng(cfg.eval_seed).derive(1).seed());
}

MetricsReport evaluate_model(const ModelParams& params, const SyntheticWorld& world,
                             const EvalConfig& cfg) {
  MetricsReport rep;
  const PairBatch pool = eval_image_pool(world, cfg);

  const Matrix img_acts = encode(params.image_tower, pool.image_inputs);
  const Matrix txt_acts = encode(params.text_tower, pool.text_inputs);

  rep.l0_images = mean_l0(img_acts, cfg.tau);
  rep.l0_texts = mean_l0(txt_acts, cfg.tau);
  rep.l0 = 0.5f * (rep.l0_images + rep.l0_texts);

  const auto index = FeatureActivationIndex::build(
      records_from_dense(img_acts, Modality::Image, cfg.tau), params.embed_dim(), cfg.tau);
  rep.active_fraction = active_feature_fraction(index, cfg.n_min, params.embed_dim());

  ClarityConfig ccfg;
  ccfg.tau = cfg.tau;
  ccfg.n_min = cfg.n_min;
  rep.clarity = clarity(index, reference_embeddings(pool), ccfg);

  rep.zero_shot_acc = zero_shot_accuracy(params, world, pool);

  const PairBatch pairs =
      sample_batch(world, cfg.n_retrieval_pairs, 1, Rng(cfg.eval_seed).derive(2).seed());
  rep.ir_at_1 = retrieval_at_k(params, pairs, 1).image_at_k;
  rep.tr_at_1 = retrieval_at_k(params, pairs, 1).text_at_k;
  const auto at5 = retrieval_at_k(params, pairs, std::min(5, pairs.size()));
  rep.ir_at_5 = at5.image_at_k;
  rep.tr_at_5 = at5.text_at_k;

  rep.modality = modality_stats(img_acts, txt_acts, cfg.tau);
  rep.modality_features = int(rep.modality.size());
  int in_band = 0;
  for (const auto& m : rep.modality) {
    in_band += m.modality_score >= cfg.band_lo && m.modality_score <= cfg.band_hi;
  }
  rep.multimodal_band_frac =
      rep.modality.empty() ? 0.f : float(in_band) / float(rep.modality.size());
  return rep;
}

CsvTable metrics_csv(const MetricsReport& r) {
  CsvTable t;
  t.header = {"l0",      "l0_images", "l0_texts", "active_fraction", "clarity",
              "zero_shot_acc", "ir_at_1", "ir_at_5", "tr_at_1", "tr_at_5",
              "modality_features", "multimodal_band_frac"};
  t.rows.push_back({fmt_g(r.l0), fmt_g(r.l0_images), fmt_g(r.l0_texts), fmt_g(r.active_fraction),
                    r.clarity ? fmt_g(*r.clarity) : "NA", fmt_g(r.zero_shot_acc), fmt_g(r.ir_at_1),
                    fmt_g(r.ir_at_5), fmt_g(r.tr_at_1), fmt_g(r.tr_at_5),
                    std::to_string(r.modality_features), fmt_g(r.multimodal_band_frac)});
  return t;
}

}  // namespace sclab
