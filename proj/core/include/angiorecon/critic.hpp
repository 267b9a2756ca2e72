#pragma once

// Weight-clipped critic for the Wasserstein estimate between batches of
// occupancy grids. Fixed architecture on the 8^3 mean-pooled grid:
//   512 -> 64 -> 64 -> 1, leaky-linear activations (slope 0.2) on hidden layers.

#include "angiorecon/voxel.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace angiorecon {

inline constexpr int kCriticInput = 512;
inline constexpr int kCriticHidden = 64;
inline constexpr double kLeakySlope = 0.2;

struct CriticParams {
  Eigen::MatrixXd w1 = Eigen::MatrixXd::Zero(kCriticHidden, kCriticInput);
  Eigen::VectorXd b1 = Eigen::VectorXd::Zero(kCriticHidden);
  Eigen::MatrixXd w2 = Eigen::MatrixXd::Zero(kCriticHidden, kCriticHidden);
  Eigen::VectorXd b2 = Eigen::VectorXd::Zero(kCriticHidden);
  Eigen::MatrixXd w3 = Eigen::MatrixXd::Zero(1, kCriticHidden);
  Eigen::VectorXd b3 = Eigen::VectorXd::Zero(1);
  double clip = 0.01;

  /// All parameters uniform in [-clip, clip].
  static CriticParams random(std::uint64_t seed, double clip = 0.01);

  /// Clamps every parameter to [-clip, clip].
  void clip_weights();
  double max_abs() const;
  std::size_t parameter_count() const;

  /// Layer order w1, b1, w2, b2, w3, b3; matrices row-major.
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> flat);

  void validate() const;
};

struct CriticOptimizer {
  double step = 5e-5;  ///< plain gradient ascent

  void validate() const;
};

/// 8^3 block mean of the grid as a 512-vector (x-fastest). The resolution
/// must be a multiple of 8.
Eigen::VectorXd critic_features(const VoxelGrid& grid);

double critic_forward(const CriticParams& p, const Eigen::VectorXd& x);
/// d f / d x.
Eigen::VectorXd critic_input_gradient(const CriticParams& p, const Eigen::VectorXd& x);

struct CriticEvaluation {
  double estimate = 0.0;  ///< mean f(real) - mean f(fake)
  CriticParams gradient;  ///< d estimate / d parameters (clip field unused)
};

/// Throws ValidationError on an empty batch. Per-sample terms are summed in
/// batch order.
CriticEvaluation critic_wd(std::span<const Eigen::VectorXd> real,
                           std::span<const Eigen::VectorXd> fake, const CriticParams& p);
CriticEvaluation critic_wd(std::span<const VoxelGrid> real, std::span<const VoxelGrid> fake,
                           const CriticParams& p);

/// p += step * gradient, then re-clip.
void critic_ascent_step(CriticParams& p, const CriticParams& gradient,
                        const CriticOptimizer& opt);

/// Largest |d f(s * 1) / d s| over `samples` evenly spaced s in [lo, hi],
/// i.e. the Lipschitz constant of the critic restricted to constant grids.
double critic_slope_bound_1d(const CriticParams& p, double lo, double hi, int samples = 1001);

/// Writes little-endian float32 parameters to `path` and a JSON manifest of
/// layer shapes (plus the clip bound) to `<path>.json`.
void write_critic(const CriticParams& p, const std::filesystem::path& path);
CriticParams read_critic(const std::filesystem::path& path);

}  // namespace angiorecon
