#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace angiorecon::testing {

VoxelGrid random_grid(CounterRng& rng, int w, double lo, double hi) {
  std::vector<double> v(static_cast<std::size_t>(w) * w * w);
  for (double& x : v) x = rng.uniform(lo, hi);
  return VoxelGrid(w, std::move(v));
}

VoxelGrid random_binary_grid(CounterRng& rng, int w, double density) {
  std::vector<double> v(static_cast<std::size_t>(w) * w * w);
  for (double& x : v) x = rng.uniform() < density ? 1.0 : 0.0;
  return VoxelGrid(w, std::move(v));
}

ViewAngles random_view(CounterRng& rng, double max_deg) {
  return ViewAngles::degrees(rng.uniform(-max_deg, max_deg), rng.uniform(-max_deg, max_deg));
}

VoxelGrid phantom_grid(std::uint64_t seed, int w, const ImagingGeometry& g) {
  PhantomSpec spec;
  spec.seed = seed;
  const Phantom ph = generate_phantom(spec);
  return voxelize_tubes(ph.segments, w, g, 1);
}

namespace {

Eigen::Matrix3d rotation(const ViewAngles& v) {
  const double ct = std::cos(v.theta), st = std::sin(v.theta);
  const double cp = std::cos(v.phi), sp = std::sin(v.phi);
  Eigen::Matrix3d rx, ry;
  rx << 1, 0, 0, 0, ct, -st, 0, st, ct;
  ry << cp, 0, sp, 0, 1, 0, -sp, 0, cp;
  return ry * rx;
}

}  // namespace

OracleRay oracle_pixel_ray(const ViewAngles& v, const ImagingGeometry& g, int w, double u,
                           double px) {
  // Camera-frame direction of the pixel, then the z-flip into psp.
  const double xc = (u - g.w_img / 2.0) * g.sx / (g.f * g.w_img);
  const double yc = -(px - g.h_img / 2.0) * g.sy / (g.f * g.h_img);
  const Eigen::Vector3d origin_psp(0.0, 0.0, g.L);
  const Eigen::Vector3d dir_psp(xc, yc, -1.0);
  const Eigen::Matrix3d rt = rotation(v).transpose();
  const double k = (w - 1) / g.S;
  OracleRay r;
  r.origin = (rt * origin_psp / g.S).array() * (w - 1) + 0.5 * (w - 1);
  r.direction = (k * (rt * dir_psp)).normalized();
  return r;
}

double analytic_chord(const OracleRay& r, int w, double* t0_out, double* t1_out) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double lo = -0.5, hi = w - 0.5;
    if (r.direction[a] == 0.0) {
      if (r.origin[a] < lo || r.origin[a] > hi) return 0.0;
      continue;
    }
    double ta = (lo - r.origin[a]) / r.direction[a];
    double tb = (hi - r.origin[a]) / r.direction[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  t0 = std::max(t0, 0.0);
  if (t1 <= t0) return 0.0;
  if (t0_out) *t0_out = t0;
  if (t1_out) *t1_out = t1;
  return t1 - t0;
}

SilhouetteImage dense_hard_projection(const VoxelGrid& grid, const ViewAngles& v,
                                      const ImagingGeometry& g, int out_w, int out_h,
                                      double threshold, int samples) {
  const ImagingGeometry gi = g.with_image_size(out_w, out_h);
  const int w = grid.resolution();
  SilhouetteImage img(out_w, out_h);
  for (int py = 0; py < out_h; ++py) {
    for (int px = 0; px < out_w; ++px) {
      const OracleRay r = oracle_pixel_ray(v, gi, w, px + 0.5, py + 0.5);
      double t0 = 0.0, t1 = 0.0;
      if (analytic_chord(r, w, &t0, &t1) <= 0.0) continue;
      for (int s = 0; s < samples; ++s) {
        const Eigen::Vector3d p = r.origin + (t0 + (s + 0.5) * (t1 - t0) / samples) * r.direction;
        int idx[3];
        for (int a = 0; a < 3; ++a) {
          idx[a] = std::clamp(static_cast<int>(std::floor(p[a] + 0.5)), 0, w - 1);
        }
        if (grid(idx[0], idx[1], idx[2]) >= threshold) {
          img.set(px, py, 1.0);
          break;
        }
      }
    }
  }
  return img;
}

VoxelGrid rotate_grid(const VoxelGrid& grid, const ViewAngles& v) {
  const int w = grid.resolution();
  const Eigen::Matrix3d rt = rotation(v).transpose();
  const Eigen::Vector3d c = Eigen::Vector3d::Constant(0.5 * (w - 1));
  VoxelGrid out(w);
  auto at = [&](int x, int y, int z) {
    if (x < 0 || y < 0 || z < 0 || x >= w || y >= w || z >= w) return 0.0;
    return grid(x, y, z);
  };
  for (int z = 0; z < w; ++z) {
    for (int y = 0; y < w; ++y) {
      for (int x = 0; x < w; ++x) {
        const Eigen::Vector3d q = rt * (Eigen::Vector3d(x, y, z) - c) + c;
        const int x0 = static_cast<int>(std::floor(q.x()));
        const int y0 = static_cast<int>(std::floor(q.y()));
        const int z0 = static_cast<int>(std::floor(q.z()));
        const double fx = q.x() - x0, fy = q.y() - y0, fz = q.z() - z0;
        double s = 0.0;
        for (int dz = 0; dz < 2; ++dz) {
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const double wgt = (dx ? fx : 1 - fx) * (dy ? fy : 1 - fy) * (dz ? fz : 1 - fz);
              s += wgt * at(x0 + dx, y0 + dy, z0 + dz);
            }
          }
        }
        out.set(x, y, z, std::clamp(s, 0.0, 1.0));
      }
    }
  }
  return out;
}

double brute_force_emd(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<std::size_t> perm(b.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) cost += std::abs(a[i] - b[perm[i]]);
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(a.size());
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("angiorecon_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace angiorecon::testing
