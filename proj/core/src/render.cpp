#include "angiorecon/render.hpp"

#include "angiorecon/error.hpp"
#include "angiorecon/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace angiorecon {
namespace {

void check_pixel_value(double v, std::size_t i) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ValidationError("pixel value " + std::to_string(v) + " at index " +
                          std::to_string(i) + " outside [0, 1]");
  }
}

void check_match(const VoxelGrid& grid, const RaySet& rays) {
  if (grid.resolution() != rays.resolution()) {
    throw ValidationError("grid resolution " + std::to_string(grid.resolution()) +
                          " does not match ray set resolution " +
                          std::to_string(rays.resolution()));
  }
}

void check_gradient_size(std::span<const double> d_image, const RaySet& rays) {
  if (d_image.size() != rays.ray_count()) {
    throw ValidationError("pixel gradient has " + std::to_string(d_image.size()) +
                          " entries, ray set has " + std::to_string(rays.ray_count()) + " rays");
  }
}

void check_match(const SilhouetteImage& image, const RaySet& rays) {
  if (image.width() != rays.width() || image.height() != rays.height()) {
    throw ValidationError("image " + std::to_string(image.width()) + "x" +
                          std::to_string(image.height()) + " does not match ray set " +
                          std::to_string(rays.width()) + "x" + std::to_string(rays.height()));
  }
}

struct Traversal {
  double t_entry = 0.0;
  double t_exit = 0.0;
  std::vector<std::uint32_t> voxels;
  std::vector<double> lengths;
};

// Incremental grid walk in the shifted frame where voxel k spans [k, k + 1).
Traversal traverse(const Ray& ray, int w) {
  Traversal out;
  double t0 = 0.0, t1 = 0.0;
  if (!intersect_cube(ray, w, t0, t1)) return out;
  out.t_entry = t0;
  out.t_exit = t1;

  const Eigen::Vector3d o = ray.origin.array() + 0.5;
  const Eigen::Vector3d& d = ray.direction;
  std::array<int, 3> idx{}, step{};
  std::array<double, 3> t_max{};
  for (int a = 0; a < 3; ++a) {
    const double p = o[a] + t0 * d[a];
    int i = 0;
    if (d[a] < 0.0) {
      i = static_cast<int>(std::ceil(p)) - 1;
    } else {
      i = static_cast<int>(std::floor(p));
    }
    idx[a] = std::clamp(i, 0, w - 1);
    step[a] = d[a] > 0.0 ? 1 : (d[a] < 0.0 ? -1 : 0);
  }
  auto boundary = [&](int a) {
    if (step[a] == 0) return std::numeric_limits<double>::infinity();
    const double plane = step[a] > 0 ? idx[a] + 1.0 : static_cast<double>(idx[a]);
    return (plane - o[a]) / d[a];
  };
  for (int a = 0; a < 3; ++a) t_max[a] = boundary(a);

  const auto wz = static_cast<std::size_t>(w);
  double t = t0;
  for (int guard = 0; guard < 3 * w + 6; ++guard) {
    int a = 0;
    if (t_max[1] < t_max[a]) a = 1;
    if (t_max[2] < t_max[a]) a = 2;
    const double tn = std::min(t_max[a], t1);
    const double len = tn - t;
    if (len > 0.0) {
      out.voxels.push_back(static_cast<std::uint32_t>(
          idx[0] + wz * (static_cast<std::size_t>(idx[1]) + wz * idx[2])));
      out.lengths.push_back(len);
      t = tn;
    }
    if (tn >= t1) break;
    idx[a] += step[a];
    if (idx[a] < 0 || idx[a] >= w) break;
    t_max[a] = boundary(a);
  }
  return out;
}

}  // namespace

SilhouetteImage::SilhouetteImage(int width, int height, double fill)
    : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw ValidationError("image size must be at least 1x1, got " + std::to_string(width) +
                          "x" + std::to_string(height));
  }
  check_pixel_value(fill, 0);
  values_.assign(static_cast<std::size_t>(width) * height, fill);
}

SilhouetteImage::SilhouetteImage(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (width < 1 || height < 1) {
    throw ValidationError("image size must be at least 1x1");
  }
  if (values_.size() != static_cast<std::size_t>(width) * height) {
    throw ValidationError("image " + std::to_string(width) + "x" + std::to_string(height) +
                          " needs " + std::to_string(static_cast<std::size_t>(width) * height) +
                          " values, got " + std::to_string(values_.size()));
  }
  validate();
}

void SilhouetteImage::set(int u, int v, double value) {
  check_pixel_value(value, index(u, v));
  values_.at(index(u, v)) = value;
}

void SilhouetteImage::validate() const {
  for (std::size_t i = 0; i < values_.size(); ++i) check_pixel_value(values_[i], i);
}

SilhouetteImage downsample_image(const SilhouetteImage& image, int factor) {
  if (factor < 1 || image.width() % factor != 0 || image.height() % factor != 0) {
    throw ValidationError("image downsample: factor " + std::to_string(factor) +
                          " does not divide " + std::to_string(image.width()) + "x" +
                          std::to_string(image.height()));
  }
  const int w = image.width() / factor, h = image.height() / factor;
  std::vector<double> out(static_cast<std::size_t>(w) * h);
  const double inv = 1.0 / (static_cast<double>(factor) * factor);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      double sum = 0.0;
      for (int dv = 0; dv < factor; ++dv)
        for (int du = 0; du < factor; ++du) sum += image(u * factor + du, v * factor + dv);
      out[static_cast<std::size_t>(v) * w + u] = std::clamp(sum * inv, 0.0, 1.0);
    }
  return SilhouetteImage(w, h, std::move(out));
}

double mean_abs_difference(const SilhouetteImage& a, const SilhouetteImage& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw ValidationError("mean_abs_difference: image size mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return sum / static_cast<double>(a.size());
}

Ray pixel_ray(const ViewAngles& view, const ImagingGeometry& g, int resolution, double u,
              double v, ProjectionModel model) {
  const auto to_world = world_to_psp(view).inverse();
  const auto to_vox = world_to_vox(g, resolution);
  // Back-projected pixel direction in the camera frame, at unit depth.
  const double xc = (u - g.w_img / 2.0) * g.sx / (g.f * g.w_img);
  const double yc = -(v - g.h_img / 2.0) * g.sy / (g.f * g.h_img);

  Point3<Frame::psp> origin{0.0, 0.0, g.L};
  Eigen::Vector3d dir_psp(xc, yc, -1.0);
  if (model == ProjectionModel::parallel) {
    origin = {xc * g.L, yc * g.L, g.L};
    dir_psp = {0.0, 0.0, -1.0};
  }
  const Point3<Frame::vox> o = to_vox(to_world(origin));
  const Eigen::Vector3d d = to_vox.direction(to_world.direction(dir_psp));
  return {o.vec(), d.normalized()};
}

bool intersect_cube(const Ray& ray, int resolution, double& t_entry, double& t_exit) {
  const Eigen::Vector3d o = ray.origin.array() + 0.5;
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double d = ray.direction[a];
    if (d == 0.0) {
      if (o[a] < 0.0 || o[a] > resolution) return false;
      continue;
    }
    double ta = (0.0 - o[a]) / d;
    double tb = (resolution - o[a]) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (!(t1 > t0)) return false;
  t_entry = t0;
  t_exit = t1;
  return true;
}

RaySample RaySet::operator[](std::size_t ray) const {
  RaySample s;
  s.u = static_cast<int>(ray % static_cast<std::size_t>(width_));
  s.v = static_cast<int>(ray / static_cast<std::size_t>(width_));
  s.t_entry = t_entry_[ray];
  s.t_exit = t_exit_[ray];
  const std::size_t b = offsets_[ray], e = offsets_[ray + 1];
  s.voxels = std::span<const std::uint32_t>(voxels_).subspan(b, e - b);
  s.lengths = std::span<const double>(lengths_).subspan(b, e - b);
  return s;
}

std::span<const std::uint32_t> RaySet::entries_of_voxel(std::size_t voxel) const {
  const std::size_t b = voxel_offsets_[voxel], e = voxel_offsets_[voxel + 1];
  return std::span<const std::uint32_t>(voxel_entries_).subspan(b, e - b);
}

RaySet cast_rays(const ViewAngles& view, const ImagingGeometry& g, int resolution,
                 int out_w, int out_h, ProjectionModel model, int jobs) {
  if (resolution < 2) throw ValidationError("cast_rays: resolution must be at least 2");
  const ImagingGeometry gi = g.with_image_size(out_w, out_h);
  view.validate();

  const auto n_rays = static_cast<std::size_t>(out_w) * out_h;
  std::vector<Traversal> traversals(n_rays);
  parallel_for(n_rays, jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const double u = static_cast<double>(r % out_w) + 0.5;
      const double v = static_cast<double>(r / out_w) + 0.5;
      const Ray ray = pixel_ray(view, gi, resolution, u, v, model);
      const Eigen::Vector3d& o = ray.origin;
      if (o.minCoeff() >= -0.5 && o.maxCoeff() <= resolution - 0.5) {
        throw ValidationError("degenerate geometry: ray source lies inside the voxel cube");
      }
      traversals[r] = traverse(ray, resolution);
    }
  });

  RaySet rs;
  rs.resolution_ = resolution;
  rs.width_ = out_w;
  rs.height_ = out_h;
  rs.offsets_.assign(1, 0);
  rs.offsets_.reserve(n_rays + 1);
  rs.t_entry_.reserve(n_rays);
  rs.t_exit_.reserve(n_rays);
  for (auto& t : traversals) {
    rs.voxels_.insert(rs.voxels_.end(), t.voxels.begin(), t.voxels.end());
    rs.lengths_.insert(rs.lengths_.end(), t.lengths.begin(), t.lengths.end());
    rs.offsets_.push_back(rs.voxels_.size());
    rs.t_entry_.push_back(t.t_entry);
    rs.t_exit_.push_back(t.t_exit);
  }
  if (rs.voxels_.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw ValidationError("cast_rays: too many traversal entries");
  }

  // Counting sort of entries by voxel; entries stay in increasing order.
  const std::size_t n_vox = static_cast<std::size_t>(resolution) * resolution * resolution;
  rs.voxel_offsets_.assign(n_vox + 1, 0);
  for (auto vx : rs.voxels_) ++rs.voxel_offsets_[vx + 1];
  for (std::size_t i = 0; i < n_vox; ++i) rs.voxel_offsets_[i + 1] += rs.voxel_offsets_[i];
  rs.voxel_entries_.resize(rs.voxels_.size());
  std::vector<std::size_t> cursor(rs.voxel_offsets_.begin(), rs.voxel_offsets_.end() - 1);
  for (std::size_t e = 0; e < rs.voxels_.size(); ++e) {
    rs.voxel_entries_[cursor[rs.voxels_[e]]++] = static_cast<std::uint32_t>(e);
  }
  return rs;
}

SilhouetteImage project_soft(const VoxelGrid& grid, const RaySet& rays, int jobs) {
  check_match(grid, rays);
  std::vector<double> out(rays.ray_count(), 0.0);
  const auto p = grid.values();
  parallel_for(rays.ray_count(), jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const auto s = rays[r];
      if (s.empty()) continue;
      double transmit = 1.0;
      for (auto vx : s.voxels) transmit *= 1.0 - p[vx];
      out[r] = 1.0 - transmit;
    }
  });
  return SilhouetteImage(rays.width(), rays.height(), std::move(out));
}

SilhouetteImage project_hard(const VoxelGrid& grid, const RaySet& rays, double threshold,
                             int jobs) {
  check_match(grid, rays);
  std::vector<double> out(rays.ray_count(), 0.0);
  const auto p = grid.values();
  parallel_for(rays.ray_count(), jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const auto s = rays[r];
      out[r] = std::any_of(s.voxels.begin(), s.voxels.end(),
                           [&](std::uint32_t vx) { return p[vx] >= threshold; })
                   ? 1.0
                   : 0.0;
    }
  });
  return SilhouetteImage(rays.width(), rays.height(), std::move(out));
}

SilhouetteImage project_attenuation(const VoxelGrid& grid, const RaySet& rays, double mu,
                                    int jobs) {
  check_match(grid, rays);
  if (!(mu >= 0.0)) throw ValidationError("attenuation coefficient must be non-negative");
  std::vector<double> out(rays.ray_count(), 0.0);
  const auto p = grid.values();
  parallel_for(rays.ray_count(), jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const auto s = rays[r];
      double path = 0.0;
      for (std::size_t i = 0; i < s.voxels.size(); ++i) path += s.lengths[i] * p[s.voxels[i]];
      out[r] = 1.0 - std::exp(-mu * path);
    }
  });
  return SilhouetteImage(rays.width(), rays.height(), std::move(out));
}

namespace {

// Sums per-entry contributions into voxels in entry order.
std::vector<double> gather(const RaySet& rays, const std::vector<double>& contrib,
                           std::size_t n_vox, int jobs) {
  std::vector<double> grad(n_vox, 0.0);
  parallel_for(n_vox, jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t v = begin; v < end; ++v) {
      double sum = 0.0;
      for (auto e : rays.entries_of_voxel(v)) sum += contrib[e];
      grad[v] = sum;
    }
  });
  return grad;
}

}  // namespace

std::vector<double> backward(const VoxelGrid& grid, const RaySet& rays,
                             std::span<const double> d_image, int jobs) {
  check_match(grid, rays);
  check_gradient_size(d_image, rays);
  const auto p = grid.values();
  std::vector<double> contrib(rays.entry_count(), 0.0);
  const auto offsets = rays.offsets();
  parallel_for(rays.ray_count(), jobs, [&](std::size_t begin, std::size_t end) {
    std::vector<double> suffix;
    for (std::size_t r = begin; r < end; ++r) {
      const auto s = rays[r];
      const double d = d_image[r];
      const std::size_t n = s.voxels.size();
      if (n == 0 || d == 0.0) continue;
      suffix.assign(n + 1, 1.0);
      for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] * (1.0 - p[s.voxels[i]]);
      double prefix = 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        contrib[offsets[r] + i] = d * prefix * suffix[i + 1];
        prefix *= 1.0 - p[s.voxels[i]];
      }
    }
  });
  return gather(rays, contrib, grid.size(), jobs);
}

std::vector<double> backward_attenuation(const VoxelGrid& grid, const RaySet& rays, double mu,
                                         std::span<const double> d_image, int jobs) {
  check_match(grid, rays);
  check_gradient_size(d_image, rays);
  const auto p = grid.values();
  std::vector<double> contrib(rays.entry_count(), 0.0);
  const auto offsets = rays.offsets();
  parallel_for(rays.ray_count(), jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const auto s = rays[r];
      double path = 0.0;
      for (std::size_t i = 0; i < s.voxels.size(); ++i) path += s.lengths[i] * p[s.voxels[i]];
      const double scale = d_image[r] * mu * std::exp(-mu * path);
      for (std::size_t i = 0; i < s.voxels.size(); ++i) {
        contrib[offsets[r] + i] = scale * s.lengths[i];
      }
    }
  });
  return gather(rays, contrib, grid.size(), jobs);
}

std::vector<bool> backproject(const SilhouetteImage& target, const RaySet& rays,
                              double threshold) {
  check_match(target, rays);
  const std::size_t n = static_cast<std::size_t>(rays.resolution()) * rays.resolution() *
                        rays.resolution();
  std::vector<bool> mask(n, false);
  for (std::size_t r = 0; r < rays.ray_count(); ++r) {
    if (!(target[r] > threshold)) continue;
    for (auto vx : rays[r].voxels) mask[vx] = true;
  }
  return mask;
}

std::vector<bool> observed_voxels(const RaySet& rays) {
  const std::size_t n = static_cast<std::size_t>(rays.resolution()) * rays.resolution() *
                        rays.resolution();
  std::vector<bool> mask(n, false);
  for (auto vx : rays.voxels()) mask[vx] = true;
  return mask;
}

}  // namespace angiorecon
