#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "kt/models.hpp"

namespace kt {

// Checkpoint container: a single binary archive holding the JSON model
// config followed by named parameter tensors (name, shape, row-major
// little-endian 32-bit floats).

void save_checkpoint(const std::string& path, const Model& model);

struct Checkpoint {
  ModelConfig config;
  std::vector<std::pair<std::string, ad::Matrix>> tensors;
};

Checkpoint read_checkpoint(const std::string& path);

/// Rebuild a model from a checkpoint (parameters matched by name; shapes
/// must agree exactly).
std::unique_ptr<Model> load_model(const std::string& path);

}  // namespace kt
