#pragma once

// AIM1 image files: 16-byte ASCII line "AIM1 <w> <h>" padded with spaces and
// terminated by '\n', then w*h little-endian float32 values, row-major.
// PGM output (P5, maxval 255, round(255 * p)) is for viewing only.

#include "angiorecon/geometry.hpp"
#include "angiorecon/render.hpp"

#include <filesystem>
#include <optional>

namespace angiorecon {

SilhouetteImage read_image(const std::filesystem::path& path);
void write_image(const SilhouetteImage& image, const std::filesystem::path& path);
void write_pgm(const SilhouetteImage& image, const std::filesystem::path& path);

/// Image sidecar carries the geometry (resampled to the image size) and view.
void write_image_sidecar(const std::filesystem::path& image_path, const ImagingGeometry& g,
                         const ViewAngles& view);

struct ImageSidecar {
  ImagingGeometry geometry;
  std::optional<ViewAngles> view;
};
ImageSidecar read_image_sidecar(const std::filesystem::path& image_path);

}  // namespace angiorecon
