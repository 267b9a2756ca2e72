#pragma once

// AVG1 grid files: a 16-byte ASCII line "AVG1 <W>" padded with spaces and
// terminated by '\n', then W^3 little-endian float32 values, x-fastest.
// Values are stored as float32; anything read back re-writes byte-for-byte.

#include "angiorecon/voxel.hpp"

#include <filesystem>

namespace angiorecon {

VoxelGrid read_grid(const std::filesystem::path& path);
void write_grid(const VoxelGrid& grid, const std::filesystem::path& path);

/// Grid plus its geometry sidecar "<name>.json".
void write_grid_with_sidecar(const VoxelGrid& grid, const ImagingGeometry& g,
                             const std::filesystem::path& path);
/// Throws ValidationError naming the sidecar when it is missing.
ImagingGeometry read_grid_sidecar(const std::filesystem::path& grid_path);

}  // namespace angiorecon
