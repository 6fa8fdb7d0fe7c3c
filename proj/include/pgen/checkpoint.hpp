#pragma once

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "pgen/nn/layers.hpp"

namespace pgen {

// Versioned binary checkpoint: magic + JSON header (kind, config snapshot,
// seed, tensor directory) followed by little-endian float32 blobs. The header
// is free-form JSON owned by each model kind.
struct Checkpoint {
  std::string kind;
  std::string header_json;  // config snapshot, seed, anything model-specific
  std::vector<std::pair<std::string, std::vector<float>>> tensors;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Pack / unpack against a model's parameter slots (values and buffers).
template <typename S>
void pack_slots(const std::vector<nn::ParamSlot<S>>& slots, Checkpoint& ck) {
  for (const auto& s : slots) {
    std::vector<float> blob(std::size_t(s.value->size()));
    for (Eigen::Index i = 0; i < s.value->size(); ++i) blob[std::size_t(i)] = float((*s.value)[i]);
    ck.tensors.emplace_back(s.name, std::move(blob));
  }
}

template <typename S>
void unpack_slots(const Checkpoint& ck, std::vector<nn::ParamSlot<S>>& slots) {
  if (ck.tensors.size() != slots.size())
    throw std::runtime_error("checkpoint tensor count mismatch (" + std::to_string(ck.tensors.size()) + " vs " +
                             std::to_string(slots.size()) + ")");
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto& [name, blob] = ck.tensors[i];
    if (name != slots[i].name) throw std::runtime_error("checkpoint tensor name mismatch at '" + name + "'");
    if (Eigen::Index(blob.size()) != slots[i].value->size())
      throw std::runtime_error("checkpoint tensor size mismatch at '" + name + "'");
    for (std::size_t j = 0; j < blob.size(); ++j) (*slots[i].value)[Eigen::Index(j)] = S(blob[j]);
  }
}

}  // namespace pgen
