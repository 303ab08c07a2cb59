#include "sclab/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "sclab/checkpoint.hpp"
#include "sclab/loss.hpp"

namespace sclab {

namespace {

enum : uint64_t {
  kStreamDataset = 10,
  kStreamInit = 11,
  kStreamOrder = 12,
  kStreamDecorrelate = 13,
};

std::string fmt_float(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

Matrix gather_rows(const Matrix& src, const std::vector<int>& order, int begin, int count) {
  Matrix out(count, src.cols);
  for (int i = 0; i < count; ++i) {
    const float* s = src.row(order[std::size_t(begin + i)]);
    std::copy(s, s + src.cols, out.row(i));
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("TrainConfig: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
  if (dataset_size < batch_size) throw ConfigError("TrainConfig: dataset smaller than one batch");
  if (checkpoint_fractions.empty() || checkpoint_fractions.back() != 1.0) {
    throw ConfigError("TrainConfig: checkpoint_fractions must end at 1.0");
  }
  double prev = 0.0;
  for (double f : checkpoint_fractions) {
    if (f <= prev || f > 1.0) throw ConfigError("TrainConfig: checkpoint_fractions must be sorted in (0,1]");
    prev = f;
  }
}

ModelConfig TrainConfig::model_config(const SyntheticWorld& world) const {
  ModelConfig mc;
  mc.image_input_dim = world.image_input_dim;
  mc.text_input_dim = world.text_input_dim;
  mc.hidden_dims = hidden_dims;
  mc.expansion_factor = expansion_factor;
  mc.head_mode = head_mode;
  mc.logit_scale_cap = logit_scale_cap;
  mc.validate();
  return mc;
}

float batch_mean_l0(const Matrix& z_img, const Matrix& z_txt) {
  int64_t nnz = 0;
  for (float v : z_img.data) nnz += v != 0.f;
  for (float v : z_txt.data) nnz += v != 0.f;
  return float(double(nnz) / double(z_img.rows + z_txt.rows));
}

TrainResult train(const SyntheticWorld& world, const TrainConfig& cfg) {
  cfg.validate();
  const ModelConfig mc = cfg.model_config(world);

  Rng root(cfg.seed);
  const PairBatch dataset = sample_batch(world, cfg.dataset_size, cfg.mixing,
                                         root.derive(kStreamDataset).seed());

  TrainResult result;
  result.params = init_params(mc, root.derive(kStreamInit).seed());
  ModelParams& params = result.params;
  RunLog& log = result.log;

  std::vector<ParamView> views = param_views(params, cfg.scale_lr_mult);
  AdamState state;
  state.init(views);

  const int steps_per_epoch = cfg.dataset_size / cfg.batch_size;
  const int64_t total_steps = int64_t(cfg.epochs) * steps_per_epoch;

  // fraction -> step at which that checkpoint fires
  std::vector<std::pair<int64_t, double>> ckpt_steps;
  for (double f : cfg.checkpoint_fractions) {
    ckpt_steps.emplace_back(std::max<int64_t>(1, std::llround(f * double(total_steps))), f);
  }

  Rng order_rng = root.derive(kStreamOrder);
  Rng decor_rng = root.derive(kStreamDecorrelate);
  std::vector<int> order(std::size_t(cfg.dataset_size));
  for (int i = 0; i < cfg.dataset_size; ++i) order[std::size_t(i)] = i;

  int64_t step = 0;
  std::size_t next_ckpt = 0;
  for (int epoch = 0; epoch < cfg.epochs && !log.partial; ++epoch) {
    order_rng.shuffle(order);
    for (int b = 0; b < steps_per_epoch; ++b) {
      Matrix img = gather_rows(dataset.image_inputs, order, b * cfg.batch_size, cfg.batch_size);
      Matrix txt = gather_rows(dataset.text_inputs, order, b * cfg.batch_size, cfg.batch_size);
      if (cfg.decorrelate_pairs) {
        std::vector<int> perm(std::size_t(cfg.batch_size));
        for (int i = 0; i < cfg.batch_size; ++i) perm[std::size_t(i)] = i;
        decor_rng.shuffle(perm);
        Matrix shuffled(cfg.batch_size, txt.cols);
        for (int i = 0; i < cfg.batch_size; ++i) {
          const float* s = txt.row(perm[std::size_t(i)]);
          std::copy(s, s + txt.cols, shuffled.row(i));
        }
        txt = std::move(shuffled);
      }

      ObjectiveResultT<float> res = contrastive_objective(params, img, txt, cfg.l1_lambda);
      // step = updates applied to the params this batch saw; step 0 is the
      // untrained model
      log.steps.push_back({step, res.loss, res.eff_scale, batch_mean_l0(res.z_img, res.z_txt)});

      std::vector<ParamView> gviews = grad_views(res);
      adam_step(views, gviews, state, cfg.adam);
      params.bump_revision();
      ++step;

      while (next_ckpt < ckpt_steps.size() && ckpt_steps[next_ckpt].first == step) {
        const double fraction = ckpt_steps[next_ckpt].second;
        if (!cfg.checkpoint_dir.empty()) {
          const std::string path = (std::filesystem::path(cfg.checkpoint_dir) /
                                    ("checkpoint_" + std::to_string(next_ckpt + 1) + ".sckpt"))
                                       .string();
          try {
            save_model_checkpoint(path, params, mc, fraction);
          } catch (const IoError&) {
            log.partial = true;
            break;
          }
          log.checkpoints.push_back({fraction, path});
        }
        ++next_ckpt;
      }
      if (log.partial) break;
    }
  }
  return result;
}

std::string runlog_csv_string(const RunLog& log) {
  std::string out = "step,loss,eff_scale,mean_l0\n";
  for (const auto& s : log.steps) {
    out += std::to_string(s.step) + "," + fmt_float(s.loss) + "," + fmt_float(s.eff_scale) + "," +
           fmt_float(s.mean_l0) + "\n";
  }
  return out;
}

void write_runlog_csv(const std::string& path, const RunLog& log) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("write_runlog_csv: cannot open " + path);
  out << runlog_csv_string(log);
  if (!out) throw IoError("write_runlog_csv: write failed for " + path);
}

}  // namespace sclab
