#pragma once

// Independent oracles and generators shared by the unit and acceptance tests.
// Nothing here calls the traversal or projection code under test.

#include "angiorecon/geometry.hpp"
#include "angiorecon/phantom.hpp"
#include "angiorecon/render.hpp"
#include "angiorecon/rng.hpp"
#include "angiorecon/voxel.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

namespace angiorecon::testing {

/// Uniform values in [lo, hi] per voxel.
VoxelGrid random_grid(CounterRng& rng, int w, double lo = 0.0, double hi = 1.0);

/// Each voxel is 1 with probability `density`, else 0.
VoxelGrid random_binary_grid(CounterRng& rng, int w, double density);

ViewAngles random_view(CounterRng& rng, double max_deg = 90.0);

/// Binary phantom with default parameters voxelized at resolution w.
VoxelGrid phantom_grid(std::uint64_t seed, int w, const ImagingGeometry& g);

/// Ray through continuous pixel coordinate (u, v), built directly from the
/// pinhole model: origin at the camera center, direction K^-1 (u, v, 1)
/// mapped through the z-flip into psp, rotated back to world and scaled into
/// voxel units. Direction is unit length.
struct OracleRay {
  Eigen::Vector3d origin;
  Eigen::Vector3d direction;
};
OracleRay oracle_pixel_ray(const ViewAngles& v, const ImagingGeometry& g, int w, double u,
                           double px);

/// Slab-method chord of a ray with [-0.5, w - 0.5]^3; 0 when it misses.
double analytic_chord(const OracleRay& r, int w, double* t0 = nullptr, double* t1 = nullptr);

/// Brute-force binary projector: `samples` evenly spaced midpoints along the
/// in-cube chord, each mapped to the voxel containing it.
SilhouetteImage dense_hard_projection(const VoxelGrid& grid, const ViewAngles& v,
                                      const ImagingGeometry& g, int out_w, int out_h,
                                      double threshold, int samples = 1000);

/// Rotates grid content by the world->psp rotation of v (trilinear resampling
/// about the cube center): out(x) = in(R^T x).
VoxelGrid rotate_grid(const VoxelGrid& grid, const ViewAngles& v);

/// Minimum assignment cost (mean |a_i - b_perm(i)|) by exhaustive search.
double brute_force_emd(const std::vector<double>& a, const std::vector<double>& b);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace angiorecon::testing
