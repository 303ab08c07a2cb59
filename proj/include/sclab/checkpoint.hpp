#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sclab/mat.hpp"
#include "sclab/model.hpp"
#include "sclab/synth.hpp"

namespace sclab {

// Container: magic "SCKPT1", one-line JSON header (kind, training fraction,
// config echo, array directory with shapes and byte offsets), then raw
// little-endian float32 payloads. Bitwise round trip by construction.
struct ArrayStore {
  std::vector<std::pair<std::string, Matrix>> arrays;
  nlohmann::json config;
  std::string kind;
  double training_fraction = 1.0;

  void add(const std::string& name, Matrix m) { arrays.emplace_back(name, std::move(m)); }
  const Matrix& get(const std::string& name) const;
  bool has(const std::string& name) const;
};

void save_array_store(const std::string& path, const ArrayStore& store);
ArrayStore load_array_store(const std::string& path);

void save_model_checkpoint(const std::string& path, const ModelParams& params,
                           const ModelConfig& cfg, double training_fraction);

struct LoadedModel {
  ModelParams params;
  ModelConfig config;
  double training_fraction = 1.0;
};

LoadedModel load_model_checkpoint(const std::string& path);

void save_world(const std::string& path, const SyntheticWorld& world);
SyntheticWorld load_world(const std::string& path);

}  // namespace sclab
