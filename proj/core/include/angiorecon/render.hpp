#pragma once

// Raytrace pooling: projects a voxel grid into a silhouette image along one
// ray per pixel, and propagates image gradients back to the voxels.
//
// Rays leave the projection center of the imaging chain (the camera origin,
// at distance L from the object on the sensor side) and pass through pixel
// centers, so that a voxel projected with vox_to_img lies on the ray cast
// through its pixel coordinate. Traversal is an incremental grid walk
// (Amanatides & Woo) over voxel cells [k - 0.5, k + 0.5]^3 of the vox frame.

#include "angiorecon/geometry.hpp"
#include "angiorecon/voxel.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace angiorecon {

/// Per-pixel occupancy probabilities in [0, 1], row-major (index = v * width + u).
class SilhouetteImage {
 public:
  SilhouetteImage() = default;
  SilhouetteImage(int width, int height, double fill = 0.0);
  SilhouetteImage(int width, int height, std::vector<double> values);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return values_.size(); }

  double operator()(int u, int v) const { return values_[index(u, v)]; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * width_ + static_cast<std::size_t>(u);
  }
  void set(int u, int v, double value);

  std::span<const double> values() const { return values_; }
  /// Raw write access; callers keep values in [0, 1].
  std::span<double> mutable_values() { return values_; }

  void validate() const;
  bool operator==(const SilhouetteImage&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

/// Block-mean image downscaling; factor must divide both dimensions.
SilhouetteImage downsample_image(const SilhouetteImage& image, int factor);
double mean_abs_difference(const SilhouetteImage& a, const SilhouetteImage& b);

enum class ProjectionModel {
  perspective,  ///< rays through the projection center
  parallel,     ///< rays parallel to the psp z-axis, magnification of the object center
};

/// A ray in the vox frame with unit direction (lengths in voxel units).
struct Ray {
  Eigen::Vector3d origin;
  Eigen::Vector3d direction;
};

/// Ray through the continuous pixel coordinate (u, v).
Ray pixel_ray(const ViewAngles& view, const ImagingGeometry& g, int resolution,
              double u, double v, ProjectionModel model = ProjectionModel::perspective);

/// Parametric entry/exit of a ray with the voxel cube [-0.5, W - 0.5]^3.
/// Returns false when the ray misses (or only grazes) the cube.
bool intersect_cube(const Ray& ray, int resolution, double& t_entry, double& t_exit);

/// One traversed ray: voxels in depth order with their segment lengths.
struct RaySample {
  int u = 0;
  int v = 0;
  double t_entry = 0.0;
  double t_exit = 0.0;
  std::span<const std::uint32_t> voxels;
  std::span<const double> lengths;

  bool empty() const { return voxels.empty(); }
  double chord() const { return empty() ? 0.0 : t_exit - t_entry; }
};

/// Traversals for every pixel of an image, in compressed row storage, plus a
/// voxel -> entry index used by the backward pass.
class RaySet {
 public:
  int resolution() const { return resolution_; }
  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t ray_count() const { return offsets_.size() - 1; }
  std::size_t entry_count() const { return voxels_.size(); }

  RaySample operator[](std::size_t ray) const;

  /// Entry indices (positions in the flattened traversal arrays) that touch
  /// voxel `voxel`, in increasing order.
  std::span<const std::uint32_t> entries_of_voxel(std::size_t voxel) const;

  std::span<const std::size_t> offsets() const { return offsets_; }
  std::span<const std::uint32_t> voxels() const { return voxels_; }
  std::span<const double> lengths() const { return lengths_; }

 private:
  friend RaySet cast_rays(const ViewAngles&, const ImagingGeometry&, int, int, int,
                          ProjectionModel, int);
  int resolution_ = 0;
  int width_ = 0;
  int height_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::uint32_t> voxels_;
  std::vector<double> lengths_;
  std::vector<double> t_entry_;
  std::vector<double> t_exit_;
  std::vector<std::size_t> voxel_offsets_;
  std::vector<std::uint32_t> voxel_entries_;
};

/// One ray per pixel of an out_w x out_h image (the sensor of `g` resampled
/// to that pixel count). Throws ValidationError when the projection center
/// lies inside the voxel cube.
RaySet cast_rays(const ViewAngles& view, const ImagingGeometry& g, int resolution,
                 int out_w, int out_h,
                 ProjectionModel model = ProjectionModel::perspective, int jobs = 0);

/// pixel = 1 - prod_i (1 - p_i) over traversed voxels; 0 for empty rays.
SilhouetteImage project_soft(const VoxelGrid& grid, const RaySet& rays, int jobs = 0);

/// pixel = 1 if any traversed voxel >= threshold, else 0.
SilhouetteImage project_hard(const VoxelGrid& grid, const RaySet& rays,
                             double threshold = 0.5, int jobs = 0);

/// X-ray style variant: pixel = 1 - exp(-mu * sum_i len_i * p_i).
SilhouetteImage project_attenuation(const VoxelGrid& grid, const RaySet& rays,
                                    double mu, int jobs = 0);

/// d_image holds one upstream gradient per ray (row-major pixels).
/// Gradient of sum_pixels d_image * project_soft(grid) w.r.t. every voxel:
/// d pixel / d p_k = prod_{i != k} (1 - p_i), summed over the rays through k.
/// Products are formed from prefix/suffix partials, so p = 1 needs no guard.
/// The per-voxel sum runs in ray order, independent of the thread count.
std::vector<double> backward(const VoxelGrid& grid, const RaySet& rays,
                             std::span<const double> d_image, int jobs = 0);

std::vector<double> backward_attenuation(const VoxelGrid& grid, const RaySet& rays,
                                         double mu, std::span<const double> d_image,
                                         int jobs = 0);

/// Voxels traversed by at least one ray whose target pixel exceeds
/// `threshold` (silhouette backprojection).
std::vector<bool> backproject(const SilhouetteImage& target, const RaySet& rays,
                              double threshold = 0.5);

/// Voxels traversed by at least one ray.
std::vector<bool> observed_voxels(const RaySet& rays);

}  // namespace angiorecon
