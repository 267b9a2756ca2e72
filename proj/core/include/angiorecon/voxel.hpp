#pragma once

#include "angiorecon/geometry.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

namespace angiorecon {

/// W x W x W occupancy probabilities in [0, 1], x-fastest:
/// index = x + W * (y + W * z).
class VoxelGrid {
 public:
  VoxelGrid() = default;
  explicit VoxelGrid(int resolution, double fill = 0.0);
  /// Takes ownership of `values`; throws ValidationError on wrong size or
  /// any value outside [0, 1].
  VoxelGrid(int resolution, std::vector<double> values);

  int resolution() const { return w_; }
  std::size_t size() const { return values_.size(); }

  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(w_) *
               (static_cast<std::size_t>(y) + static_cast<std::size_t>(w_) * z);
  }
  double operator()(int x, int y, int z) const { return values_[index(x, y, z)]; }
  double operator[](std::size_t i) const { return values_[i]; }

  /// Throws ValidationError outside [0, 1].
  void set(int x, int y, int z, double value);
  void set(std::size_t i, double value);

  std::span<const double> values() const { return values_; }
  /// Raw write access; callers keep values in [0, 1].
  std::span<double> mutable_values() { return values_; }

  std::size_t count_at_least(double threshold) const;

  /// Re-checks the [0, 1] invariant.
  void validate() const;

  bool operator==(const VoxelGrid&) const = default;

 private:
  int w_ = 0;
  std::vector<double> values_;
};

/// Intersection over union of the grids binarized at `threshold`
/// (value >= threshold is occupied). Both empty gives 1.0.
double iou(const VoxelGrid& a, const VoxelGrid& b, double threshold = 0.5);

/// Block-mean downsampling; `factor` must divide the resolution.
VoxelGrid downsample(const VoxelGrid& grid, int factor);

/// A tapered tube piece along the segment a-b in the object (world) frame.
/// The radius varies linearly from radius_a at a to radius_b at b.
struct TubeSegment {
  Eigen::Vector3d a = Eigen::Vector3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  double radius_a = 0.0;
  double radius_b = 0.0;

  /// Distance from p to the centerline and the radius at the closest point.
  struct Query {
    double distance;
    double radius;
  };
  Query query(const Eigen::Vector3d& p) const;
  bool contains(const Eigen::Vector3d& p) const;
};

/// Occupancy 1 where the voxel center lies inside any tube, else 0.
/// Every tube (including its radius) must lie inside the cube of side S
/// centred on the origin; the error message names the offending segment.
VoxelGrid voxelize_tubes(std::span<const TubeSegment> tubes, int resolution,
                         const ImagingGeometry& g, int jobs = 0);

/// World position of a voxel center.
Eigen::Vector3d voxel_center(const ImagingGeometry& g, int resolution, int x,
                             int y, int z);

}  // namespace angiorecon
