#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sclab/adam.hpp"
#include "sclab/model.hpp"
#include "sclab/synth.hpp"

namespace sclab {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 256;
  int dataset_size = 20000;
  int mixing = 2;
  AdamHyper adam;
  float scale_lr_mult = 20.f;  // faster temperature, see param_views
  uint64_t seed = 42;

  std::vector<int> hidden_dims = {32};
  int expansion_factor = 16;
  HeadMode head_mode = HeadMode::relu();
  float logit_scale_cap = 100.f;
  float l1_lambda = 0.f;

  // Measured in optimizer steps; must be sorted, within (0,1], ending at 1.
  std::vector<double> checkpoint_fractions = {0.01, 0.03, 0.10, 0.30, 1.0};
  std::string checkpoint_dir;  // empty: train without writing checkpoints

  // Control runs: permute text rows within every batch so pairs carry no
  // shared signal.
  bool decorrelate_pairs = false;

  void validate() const;
  ModelConfig model_config(const SyntheticWorld& world) const;
};

struct StepRecord {
  int64_t step = 0;
  float loss = 0.f;
  float eff_scale = 0.f;
  float mean_l0 = 0.f;
};

struct CheckpointRef {
  double fraction = 0.0;
  std::string path;
};

struct RunLog {
  std::vector<StepRecord> steps;
  std::vector<CheckpointRef> checkpoints;
  bool partial = false;  // set when a checkpoint write failed and the run aborted
};

struct TrainResult {
  ModelParams params;
  RunLog log;
};

// Adam over seeded batches; step 0 records the untrained model on the first
// batch. Bitwise deterministic for a given config.
TrainResult train(const SyntheticWorld& world, const TrainConfig& cfg);

// Exact column set: step,loss,eff_scale,mean_l0.
void write_runlog_csv(const std::string& path, const RunLog& log);
std::string runlog_csv_string(const RunLog& log);

// Mean count of entries with |value| > 0 per row, across both embedding
// matrices; the sparsity series logged during training.
float batch_mean_l0(const Matrix& z_img, const Matrix& z_txt);

}  // namespace sclab
