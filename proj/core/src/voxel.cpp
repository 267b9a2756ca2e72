#include "angiorecon/voxel.hpp"

#include "angiorecon/error.hpp"
#include "angiorecon/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace angiorecon {
namespace {

void check_value(double v, std::size_t i) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ValidationError("voxel value " + std::to_string(v) + " at index " +
                          std::to_string(i) + " outside [0, 1]");
  }
}

std::size_t cube(int w) {
  return static_cast<std::size_t>(w) * static_cast<std::size_t>(w) *
         static_cast<std::size_t>(w);
}

}  // namespace

VoxelGrid::VoxelGrid(int resolution, double fill) : w_(resolution) {
  if (resolution < 1) {
    throw ValidationError("voxel grid resolution must be positive, got " +
                          std::to_string(resolution));
  }
  check_value(fill, 0);
  values_.assign(cube(resolution), fill);
}

VoxelGrid::VoxelGrid(int resolution, std::vector<double> values)
    : w_(resolution), values_(std::move(values)) {
  if (resolution < 1) {
    throw ValidationError("voxel grid resolution must be positive, got " +
                          std::to_string(resolution));
  }
  if (values_.size() != cube(resolution)) {
    throw ValidationError("voxel grid of resolution " + std::to_string(resolution) +
                          " needs " + std::to_string(cube(resolution)) +
                          " values, got " + std::to_string(values_.size()));
  }
  validate();
}

void VoxelGrid::set(int x, int y, int z, double value) { set(index(x, y, z), value); }

void VoxelGrid::set(std::size_t i, double value) {
  check_value(value, i);
  values_.at(i) = value;
}

std::size_t VoxelGrid::count_at_least(double threshold) const {
  return static_cast<std::size_t>(std::count_if(
      values_.begin(), values_.end(), [&](double v) { return v >= threshold; }));
}

void VoxelGrid::validate() const {
  for (std::size_t i = 0; i < values_.size(); ++i) check_value(values_[i], i);
}

double iou(const VoxelGrid& a, const VoxelGrid& b, double threshold) {
  if (a.resolution() != b.resolution()) {
    throw ValidationError("iou: resolution mismatch " + std::to_string(a.resolution()) +
                          " vs " + std::to_string(b.resolution()));
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ValidationError("iou: threshold must lie in (0, 1)");
  }
  std::size_t inter = 0, uni = 0;
  const auto va = a.values();
  const auto vb = b.values();
  for (std::size_t i = 0; i < va.size(); ++i) {
    const bool oa = va[i] >= threshold;
    const bool ob = vb[i] >= threshold;
    inter += (oa && ob);
    uni += (oa || ob);
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

VoxelGrid downsample(const VoxelGrid& grid, int factor) {
  const int w = grid.resolution();
  if (factor < 1 || w % factor != 0) {
    throw ValidationError("downsample: factor " + std::to_string(factor) +
                          " does not divide resolution " + std::to_string(w));
  }
  const int n = w / factor;
  const double inv = 1.0 / (static_cast<double>(factor) * factor * factor);
  std::vector<double> out(cube(n));
  for (int z = 0; z < n; ++z)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        double sum = 0.0;
        for (int dz = 0; dz < factor; ++dz)
          for (int dy = 0; dy < factor; ++dy)
            for (int dx = 0; dx < factor; ++dx)
              sum += grid(x * factor + dx, y * factor + dy, z * factor + dz);
        // Clamp guards against rounding just past 1.
        out[static_cast<std::size_t>(x) + n * (static_cast<std::size_t>(y) + n * z)] =
            std::clamp(sum * inv, 0.0, 1.0);
      }
  return VoxelGrid(n, std::move(out));
}

TubeSegment::Query TubeSegment::query(const Eigen::Vector3d& p) const {
  const Eigen::Vector3d ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  const Eigen::Vector3d closest = a + t * ab;
  return {(p - closest).norm(), radius_a + t * (radius_b - radius_a)};
}

bool TubeSegment::contains(const Eigen::Vector3d& p) const {
  const auto q = query(p);
  return q.distance <= q.radius;
}

Eigen::Vector3d voxel_center(const ImagingGeometry& g, int resolution, int x,
                             int y, int z) {
  const double step = g.S / (resolution - 1.0);
  return {-g.S / 2.0 + x * step, -g.S / 2.0 + y * step, -g.S / 2.0 + z * step};
}

VoxelGrid voxelize_tubes(std::span<const TubeSegment> tubes, int resolution,
                         const ImagingGeometry& g, int jobs) {
  if (resolution < 2) {
    throw ValidationError("voxelize: resolution must be at least 2");
  }
  const double half = g.S / 2.0;
  for (std::size_t i = 0; i < tubes.size(); ++i) {
    const auto& t = tubes[i];
    if (!(t.radius_a >= 0.0 && t.radius_b >= 0.0)) {
      throw ValidationError("voxelize: tube segment " + std::to_string(i) +
                            " has a negative radius");
    }
    const Eigen::Vector3d lo = t.a.cwiseMin(t.b).array() - std::max(t.radius_a, t.radius_b);
    const Eigen::Vector3d hi = t.a.cwiseMax(t.b).array() + std::max(t.radius_a, t.radius_b);
    if (lo.minCoeff() < -half || hi.maxCoeff() > half) {
      std::ostringstream msg;
      msg << "voxelize: tube segment " << i << " from (" << t.a.transpose()
          << ") to (" << t.b.transpose() << ") radius " << t.radius_a << ".."
          << t.radius_b << " leaves the object cube of side " << g.S;
      throw ValidationError(msg.str());
    }
  }

  const double step = g.S / (resolution - 1.0);
  std::vector<double> values(cube(resolution), 0.0);
  const auto w = static_cast<std::size_t>(resolution);
  // Parallel over z-slabs; each slab is written by exactly one thread.
  parallel_for(w, jobs, [&](std::size_t z0, std::size_t z1) {
    for (const auto& t : tubes) {
      const double r = std::max(t.radius_a, t.radius_b);
      const Eigen::Vector3d lo = t.a.cwiseMin(t.b).array() - r;
      const Eigen::Vector3d hi = t.a.cwiseMax(t.b).array() + r;
      auto first = [&](double c) {
        return std::max(0, static_cast<int>(std::ceil((c + half) / step - 1e-9)));
      };
      auto last = [&](double c) {
        return std::min(resolution - 1,
                        static_cast<int>(std::floor((c + half) / step + 1e-9)));
      };
      const int zlo = std::max(first(lo.z()), static_cast<int>(z0));
      const int zhi = std::min(last(hi.z()), static_cast<int>(z1) - 1);
      for (int z = zlo; z <= zhi; ++z)
        for (int y = first(lo.y()); y <= last(hi.y()); ++y)
          for (int x = first(lo.x()); x <= last(hi.x()); ++x) {
            const std::size_t i = x + w * (y + w * z);
            if (values[i] != 0.0) continue;
            if (t.contains(voxel_center(g, resolution, x, y, z))) values[i] = 1.0;
          }
    }
  });
  return VoxelGrid(resolution, std::move(values));
}

}  // namespace angiorecon
