#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sclab/mat.hpp"

namespace sclab {

enum class Modality : uint8_t { Image = 0, Text = 1 };

// One sample's sparse representation: (feature index, activation) pairs.
struct ActivationRecord {
  Modality modality = Modality::Image;
  std::vector<std::pair<int, float>> entries;
};

// Cache layout: magic "SCLAB1", one-line JSON header
// {record_count, feature_dim, has_modality}, then per record a modality byte
// (omitted when has_modality is false), u32 entry count, and count pairs of
// (u32 index, f32 value), all little-endian.
void save_activation_cache(const std::string& path,
                           const std::vector<ActivationRecord>& records,
                           int feature_dim);

std::vector<ActivationRecord> load_activation_cache(const std::string& path,
                                                    int* feature_dim_out = nullptr);

// Sparsifies dense activations: keeps entries with value > tau.
std::vector<ActivationRecord> records_from_dense(const Matrix& acts, Modality modality, float tau);

}  // namespace sclab
