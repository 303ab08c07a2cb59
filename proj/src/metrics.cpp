#include "sclab/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "sclab/ops.hpp"

namespace sclab {

FeatureActivationIndex FeatureActivationIndex::build(const std::vector<ActivationRecord>& records,
                                                     int n_features, float tau) {
  FeatureActivationIndex idx;
  idx.n_features = n_features;
  idx.n_samples = int(records.size());
  idx.tau = tau;
  idx.by_feature.resize(std::size_t(n_features));
  for (int s = 0; s < int(records.size()); ++s) {
    for (const auto& [f, v] : records[std::size_t(s)].entries) {
      if (f < 0 || f >= n_features) throw DomainError("FeatureActivationIndex: feature id out of range");
      if (v > tau) idx.by_feature[std::size_t(f)].emplace_back(s, v);
    }
  }
  return idx;
}

float mean_l0(const std::vector<ActivationRecord>& records, float tau) {
  if (records.empty()) return 0.f;
  int64_t count = 0;
  for (const auto& r : records) {
    for (const auto& [f, v] : r.entries) count += std::abs(v) > tau;
  }
  return float(double(count) / double(records.size()));
}

float mean_l0(const Matrix& acts, float tau) {
  if (acts.rows == 0) return 0.f;
  int64_t count = 0;
  for (float v : acts.data) count += std::abs(v) > tau;
  return float(double(count) / double(acts.rows));
}

float active_feature_fraction(const FeatureActivationIndex& index, int n_min, int total_features) {
  if (total_features < 1) throw ConfigError("active_feature_fraction: total_features must be >= 1");
  int active = 0;
  for (const auto& lst : index.by_feature) active += int(lst.size()) >= n_min;
  return float(active) / float(total_features);
}

std::optional<float> clarity(const FeatureActivationIndex& index, const Matrix& ref_embed,
                             const ClarityConfig& cfg) {
  cfg.validate();
  double feature_acc = 0.0;
  int active_features = 0;
  for (const auto& samples : index.by_feature) {
    const int n = int(samples.size());
    if (n < cfg.n_min) continue;  // 1..n_min-1 activators count as inactive
    double pair_acc = 0.0;
    // unordered pairs; cosine symmetry makes this equal to the ordered mean
    for (int a = 0; a < n; ++a) {
      const int sa = samples[std::size_t(a)].first;
      if (sa >= ref_embed.rows) throw DomainError("clarity: sample lacks a reference embedding");
      for (int b = a + 1; b < n; ++b) {
        const int sb = samples[std::size_t(b)].first;
        double dot = 0, na = 0, nb = 0;
        for (int d = 0; d < ref_embed.cols; ++d) {
          const double xa = ref_embed(sa, d);
          const double xb = ref_embed(sb, d);
          dot += xa * xb;
          na += xa * xa;
          nb += xb * xb;
        }
        const double denom = std::sqrt(na) * std::sqrt(nb);
        pair_acc += denom > 0 ? dot / denom : 0.0;
      }
    }
    feature_acc += pair_acc / (double(n) * double(n - 1) / 2.0);
    ++active_features;
  }
  if (active_features == 0) return std::nullopt;
  return float(feature_acc / active_features);
}

std::vector<ModalityStat> modality_stats(const Matrix& acts_img, const Matrix& acts_txt, float tau) {
  if (acts_img.cols != acts_txt.cols) throw ShapeError("modality_stats: feature dims differ");
  const int n_features = acts_img.cols;
  const int total_samples = acts_img.rows + acts_txt.rows;
  std::vector<double> img_mass(std::size_t(n_features), 0.0);
  std::vector<double> txt_mass(std::size_t(n_features), 0.0);
  for (int r = 0; r < acts_img.rows; ++r) {
    const float* row = acts_img.row(r);
    for (int f = 0; f < n_features; ++f) {
      if (row[f] > tau) img_mass[std::size_t(f)] += double(row[f]);
    }
  }
  for (int r = 0; r < acts_txt.rows; ++r) {
    const float* row = acts_txt.row(r);
    for (int f = 0; f < n_features; ++f) {
      if (row[f] > tau) txt_mass[std::size_t(f)] += double(row[f]);
    }
  }
  std::vector<ModalityStat> out;
  for (int f = 0; f < n_features; ++f) {
    const double total = img_mass[std::size_t(f)] + txt_mass[std::size_t(f)];
    if (total <= 0.0) continue;
    out.push_back({f, float(img_mass[std::size_t(f)] / total), float(total / total_samples)});
  }
  return out;
}

float zero_shot_accuracy(const ModelParams& params, const SyntheticWorld& world,
                         const PairBatch& eval_images) {
  if (world.class_labels.empty()) throw ConfigError("zero_shot_accuracy: no class labels");
  std::vector<int> label_words;
  for (int c : world.class_labels) label_words.push_back(world.label_word_index(c));
  const Matrix label_inputs = world.text_inputs_for_words(label_words);
  const Matrix label_embed = l2_normalize_rows(encode(params.text_tower, label_inputs), 1e-12f);
  const Matrix img_embed = l2_normalize_rows(encode(params.image_tower, eval_images.image_inputs), 1e-12f);
  const Matrix sims = matmul_nt(img_embed, label_embed);

  int correct = 0;
  for (int i = 0; i < sims.rows; ++i) {
    int best = 0;
    for (int c = 1; c < sims.cols; ++c) {
      if (sims(i, c) > sims(i, best)) best = c;
    }
    correct += world.class_labels[std::size_t(best)] == eval_images.primary_concept(i);
  }
  return float(correct) / float(sims.rows);
}

RetrievalResult retrieval_at_k(const ModelParams& params, const PairBatch& pairs, int k) {
  const int n = pairs.size();
  if (k < 1 || k > n) throw ConfigError("retrieval_at_k: k must be in [1, n]");
  const Matrix zi = l2_normalize_rows(encode(params.image_tower, pairs.image_inputs), 1e-12f);
  const Matrix zt = l2_normalize_rows(encode(params.text_tower, pairs.text_inputs), 1e-12f);
  const Matrix sims = matmul_nt(zi, zt);  // rows: images, cols: texts

  // rank of the true partner = number of strictly better candidates
  int img_hits = 0;  // text query retrieves its image
  int txt_hits = 0;  // image query retrieves its text
  for (int q = 0; q < n; ++q) {
    int better_img = 0;
    int better_txt = 0;
    for (int c = 0; c < n; ++c) {
      better_img += sims(c, q) > sims(q, q);
      better_txt += sims(q, c) > sims(q, q);
    }
    img_hits += better_img < k;
    txt_hits += better_txt < k;
  }
  return {float(img_hits) / float(n), float(txt_hits) / float(n)};
}

}  // namespace sclab
