#pragma once

#include "radarfield/model.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace radarfield {

/// A trained model with the intensity range used to normalize its labels.
struct ModelBundle {
  RadarField model;
  IntensityRange intensity_range;
};

/// Network checkpoint: magic, version, scene box, intensity range, model
/// config, then both MLPs as little-endian f32. The feature grid is stored
/// separately (TriQuadtreeGrid::serialize).
std::vector<std::uint8_t> serialize_networks(const ModelBundle& bundle);
ModelBundle deserialize_model(std::span<const std::uint8_t> networks, std::span<const std::uint8_t> grid);

struct SavedModel {
  std::filesystem::path checkpoint;
  std::filesystem::path grid;
  std::size_t checkpoint_bytes = 0;
  std::size_t grid_bytes = 0;

  /// Stored map size: network parameters plus the feature grid.
  std::size_t map_size() const { return checkpoint_bytes + grid_bytes; }
};

/// Writes `model.ckpt` and `map.grid` into `dir`.
SavedModel save_model(const std::filesystem::path& dir, const ModelBundle& bundle);
ModelBundle load_model(const std::filesystem::path& dir);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace radarfield
