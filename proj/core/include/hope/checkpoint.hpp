#pragma once

#include "hope/tensor.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hope {

inline constexpr int kCheckpointFormatVersion = 1;

/// On-disk layout: `<path>` holds a JSON manifest
///
///   {"format_version": 1, "blob": "<file name>", "config": {...},
///    "params": {"<name>": {"shape": [...], "dtype": "f64", "offset": <bytes>}, ...}}
///
/// and `<path>.bin` holds every tensor as little-endian IEEE-754 doubles,
/// concatenated in manifest order.
struct Checkpoint {
  std::string config_json = "{}";
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor* find(const std::string& name) const;
};

std::filesystem::path checkpoint_blob_path(const std::filesystem::path& manifest);

void save_checkpoint(const std::filesystem::path& manifest, std::span<const NamedParam> params,
                     const std::string& config_json = "{}");

Checkpoint load_checkpoint(const std::filesystem::path& manifest);

// Copies checkpoint tensors into `params` by name. Every parameter must be
// present with an identical shape.
void restore_parameters(const Checkpoint& checkpoint, std::span<const NamedParam> params);

} // namespace hope
