#include "angiorecon/objective.hpp"

#include "angiorecon/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace angiorecon {

BceResult bce(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) {
    throw ValidationError("bce: shape mismatch, " + std::to_string(pred.size()) + " vs " +
                          std::to_string(target.size()) + " elements");
  }
  if (pred.empty()) throw ValidationError("bce: empty input");
  const double n = static_cast<double>(pred.size());
  BceResult r;
  r.gradient.resize(pred.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(pred[i], kBceEpsilon, 1.0 - kBceEpsilon);
    const double t = target[i];
    sum -= t * std::log(p) + (1.0 - t) * std::log1p(-p);
    r.gradient[i] = (-t / p + (1.0 - t) / (1.0 - p)) / n;
  }
  r.loss = sum / n;
  return r;
}

BceResult bce_2d(const SilhouetteImage& pred, const SilhouetteImage& target) {
  if (pred.width() != target.width() || pred.height() != target.height()) {
    throw ValidationError("bce_2d: image size mismatch " + std::to_string(pred.width()) + "x" +
                          std::to_string(pred.height()) + " vs " +
                          std::to_string(target.width()) + "x" +
                          std::to_string(target.height()));
  }
  return bce(pred.values(), target.values());
}

BceResult bce_3d(const VoxelGrid& pred, const VoxelGrid& target) {
  if (pred.resolution() != target.resolution()) {
    throw ValidationError("bce_3d: resolution mismatch " + std::to_string(pred.resolution()) +
                          " vs " + std::to_string(target.resolution()));
  }
  return bce(pred.values(), target.values());
}

double wasserstein_1d_exact(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ValidationError("wasserstein_1d_exact: sample sets differ in size (" +
                          std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
  if (a.empty()) return 0.0;
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) sum += std::abs(sa[i] - sb[i]);
  return sum / static_cast<double>(sa.size());
}

}  // namespace angiorecon
