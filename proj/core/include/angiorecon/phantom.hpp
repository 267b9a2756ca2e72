#pragma once

// Synthetic branching-vessel phantoms and the rotate/resize augmentation
// used to grow a training set from a handful of models.

#include "angiorecon/voxel.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace angiorecon {

/// Recursive bifurcating tree of constant-radius tube branches. Lengths and
/// radii are in units of the object cube side (the tree lives in the unit
/// cube centred on the origin).
struct PhantomSpec {
  std::uint64_t seed = 0;
  int depth = 3;                    ///< levels; 1 = a single unbranched tube
  double root_radius = 0.04;
  double taper = 0.8;               ///< child radius / parent radius, in (0, 1)
  double branch_angle_range = 1.0;  ///< radians; child deflection in [range/2, range]
  int segments_per_branch = 6;
  double tortuosity = 0.08;  ///< sinusoid amplitude as a fraction of branch length
  double root_length = 0.16;
  double length_ratio = 0.75;  ///< child length / parent length
  /// Every tube surface point must lie within this distance of the cube
  /// center after centering the tree.
  double max_extent = 0.3;

  void validate() const;
};

struct PhantomBranch {
  int parent = -1;  ///< -1 for the root
  int level = 0;    ///< 0 for the root
  double radius = 0.0;
  std::size_t first_segment = 0;
  std::size_t segment_count = 0;
};

struct Phantom {
  std::vector<TubeSegment> segments;
  std::vector<PhantomBranch> branches;
};

/// Deterministic in spec (including seed). Draws are retried on independent
/// sub-streams when a tree exceeds max_extent; throws ValidationError when
/// no attempt fits (reduce depth, lengths or radius).
Phantom generate_phantom(const PhantomSpec& spec);

struct AugmentationSpec {
  int n_rotations = 20;
  int n_scales = 10;
  double rot_min_deg = 5.0;
  double rot_max_deg = 15.0;
  double scale_min = 0.03;
  double scale_max = 0.10;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AugmentationParams {
  int rotation_index = 0;
  int scale_index = 0;
  Eigen::Vector3d rotation_deg = Eigen::Vector3d::Zero();  ///< about x, y, z
  double scale = 1.0;
};

struct AugmentedVariant {
  AugmentationParams params;
  std::vector<TubeSegment> tubes;
};

/// All n_rotations x n_scales parameter combinations, rotation-major. Each
/// rotation has per-axis magnitude uniform in [rot_min_deg, rot_max_deg] with
/// an independent random sign; each scale is 1 +/- u, u uniform in
/// [scale_min, scale_max]. Rotation i and scale j come from their own
/// sub-streams of the seed, so the result does not depend on evaluation order.
std::vector<AugmentationParams> augmentation_params(const AugmentationSpec& a);

/// Applies p -> scale * R * p (R = Rz * Ry * Rx) to each tube, radius -> scale * r.
std::vector<AugmentedVariant> augment(std::span<const TubeSegment> model,
                                      const AugmentationSpec& a);

std::vector<TubeSegment> transform_tubes(std::span<const TubeSegment> tubes,
                                         const Eigen::Matrix3d& rotation,
                                         double scale);
std::vector<TubeSegment> scale_tubes(std::span<const TubeSegment> tubes, double k);

nlohmann::json to_json(const PhantomSpec& spec);
PhantomSpec phantom_spec_from_json(const nlohmann::json& j, PhantomSpec base = {});
nlohmann::json to_json(const AugmentationSpec& a);
AugmentationSpec augmentation_spec_from_json(const nlohmann::json& j,
                                             AugmentationSpec base = {});
nlohmann::json tubes_to_json(std::span<const TubeSegment> tubes);

}  // namespace angiorecon
