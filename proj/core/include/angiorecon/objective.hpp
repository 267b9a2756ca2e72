#pragma once

#include "angiorecon/render.hpp"
#include "angiorecon/voxel.hpp"

#include <span>
#include <vector>

namespace angiorecon {

/// Predictions are clamped to [eps, 1 - eps] before taking logs.
inline constexpr double kBceEpsilon = 1e-7;

struct BceResult {
  double loss = 0.0;             ///< mean over elements
  std::vector<double> gradient;  ///< d loss / d pred, per element
};

/// Mean binary cross-entropy -[t ln p + (1 - t) ln(1 - p)] with p clamped.
/// The gradient is the analytic derivative evaluated at the clamped value
/// (it keeps its sign where the clamp is active).
BceResult bce(std::span<const double> pred, std::span<const double> target);
BceResult bce_2d(const SilhouetteImage& pred, const SilhouetteImage& target);
BceResult bce_3d(const VoxelGrid& pred, const VoxelGrid& target);

/// Exact earth mover's distance between two equal-size empirical
/// distributions on the line: mean |a_(i) - b_(i)| over sorted order.
/// Inputs need not be sorted.
double wasserstein_1d_exact(std::span<const double> a, std::span<const double> b);

}  // namespace angiorecon
