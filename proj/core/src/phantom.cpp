#include "angiorecon/phantom.hpp"

#include "angiorecon/error.hpp"
#include "angiorecon/geometry.hpp"
#include "angiorecon/rng.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <string>

namespace angiorecon {
namespace {

constexpr int kMaxAttempts = 32;

Eigen::Vector3d random_perpendicular(const Eigen::Vector3d& dir, CounterRng& rng) {
  for (;;) {
    const Eigen::Vector3d r(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const Eigen::Vector3d p = r - r.dot(dir) * dir;
    if (p.norm() > 1e-3) return p.normalized();
  }
}

class TreeBuilder {
 public:
  TreeBuilder(const PhantomSpec& spec, CounterRng rng) : spec_(spec), rng_(rng) {}

  Phantom build() {
    const Eigen::Vector3d dir =
        Eigen::Vector3d(rng_.uniform(-0.3, 0.3), -1.0, rng_.uniform(-0.3, 0.3)).normalized();
    grow(Eigen::Vector3d::Zero(), dir, spec_.root_length, spec_.root_radius, 0, -1);
    return std::move(out_);
  }

 private:
  void grow(const Eigen::Vector3d& start, const Eigen::Vector3d& dir, double length,
            double radius, int level, int parent) {
    const Eigen::Vector3d wiggle = random_perpendicular(dir, rng_);
    const double amplitude = spec_.tortuosity * length * rng_.uniform(0.5, 1.0);

    PhantomBranch branch;
    branch.parent = parent;
    branch.level = level;
    branch.radius = radius;
    branch.first_segment = out_.segments.size();
    branch.segment_count = static_cast<std::size_t>(spec_.segments_per_branch);

    auto point = [&](int i) -> Eigen::Vector3d {
      const double s = static_cast<double>(i) / spec_.segments_per_branch;
      return start + s * length * dir + amplitude * std::sin(std::numbers::pi * s) * wiggle;
    };
    for (int i = 0; i < spec_.segments_per_branch; ++i) {
      out_.segments.push_back({point(i), point(i + 1), radius, radius});
    }
    const int id = static_cast<int>(out_.branches.size());
    out_.branches.push_back(branch);

    if (level + 1 >= spec_.depth) return;
    const Eigen::Vector3d end = start + length * dir;
    const Eigen::Vector3d axis = random_perpendicular(dir, rng_);
    const double range = spec_.branch_angle_range;
    const double a1 = rng_.uniform(range / 2, range);
    const double a2 = -rng_.uniform(range / 2, range);
    const Eigen::Vector3d d1 = Eigen::AngleAxisd(a1, axis) * dir;
    const Eigen::Vector3d d2 = Eigen::AngleAxisd(a2, axis) * dir;
    grow(end, d1.normalized(), length * spec_.length_ratio, radius * spec_.taper, level + 1, id);
    grow(end, d2.normalized(), length * spec_.length_ratio, radius * spec_.taper, level + 1, id);
  }

  const PhantomSpec& spec_;
  CounterRng rng_;
  Phantom out_;
};

double extent(const Phantom& p) {
  double e = 0.0;
  for (const auto& s : p.segments) {
    e = std::max(e, s.a.norm() + s.radius_a);
    e = std::max(e, s.b.norm() + s.radius_b);
  }
  return e;
}

void center(Phantom& p) {
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(1e300);
  Eigen::Vector3d hi = Eigen::Vector3d::Constant(-1e300);
  for (const auto& s : p.segments) {
    const double r = std::max(s.radius_a, s.radius_b);
    lo = lo.cwiseMin(s.a.cwiseMin(s.b) - Eigen::Vector3d::Constant(r));
    hi = hi.cwiseMax(s.a.cwiseMax(s.b) + Eigen::Vector3d::Constant(r));
  }
  const Eigen::Vector3d c = 0.5 * (lo + hi);
  for (auto& s : p.segments) {
    s.a -= c;
    s.b -= c;
  }
}

}  // namespace

void PhantomSpec::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("phantom spec: " + what); };
  if (depth < 1) fail("depth must be >= 1");
  if (depth > 12) fail("depth must be <= 12");
  if (!(root_radius > 0.0)) fail("root_radius must be positive");
  if (!(taper > 0.0 && taper < 1.0)) fail("taper must lie in (0, 1)");
  if (!(branch_angle_range >= 0.0 && branch_angle_range <= std::numbers::pi)) {
    fail("branch_angle_range must lie in [0, pi]");
  }
  if (segments_per_branch < 1) fail("segments_per_branch must be >= 1");
  if (!(tortuosity >= 0.0)) fail("tortuosity must be non-negative");
  if (!(root_length > 0.0)) fail("root_length must be positive");
  if (!(length_ratio > 0.0)) fail("length_ratio must be positive");
  if (!(max_extent > 0.0 && max_extent <= 0.5)) fail("max_extent must lie in (0, 0.5]");
}

Phantom generate_phantom(const PhantomSpec& spec) {
  spec.validate();
  const CounterRng root(spec.seed);
  double best = 0.0;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Phantom p = TreeBuilder(spec, root.split(static_cast<std::uint64_t>(attempt))).build();
    center(p);
    const double e = extent(p);
    if (e <= spec.max_extent) return p;
    best = (attempt == 0) ? e : std::min(best, e);
  }
  throw ValidationError("phantom spec produces geometry exceeding the cube: smallest extent " +
                        std::to_string(best) + " > max_extent " +
                        std::to_string(spec.max_extent) + "; reduce depth, lengths or radius");
}

void AugmentationSpec::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("augmentation spec: " + what); };
  if (n_rotations < 1 || n_scales < 1) fail("n_rotations and n_scales must be >= 1");
  if (!(rot_min_deg > 0.0 && rot_min_deg <= rot_max_deg)) fail("need 0 < rot_min_deg <= rot_max_deg");
  if (!(scale_min > 0.0 && scale_min <= scale_max && scale_max < 1.0)) {
    fail("need 0 < scale_min <= scale_max < 1");
  }
}

std::vector<AugmentationParams> augmentation_params(const AugmentationSpec& a) {
  a.validate();
  const CounterRng root(a.seed);
  const CounterRng rot_root = root.split(0);
  const CounterRng scale_root = root.split(1);

  std::vector<Eigen::Vector3d> rotations(static_cast<std::size_t>(a.n_rotations));
  for (int i = 0; i < a.n_rotations; ++i) {
    CounterRng rng = rot_root.split(static_cast<std::uint64_t>(i));
    for (int axis = 0; axis < 3; ++axis) {
      const double magnitude = rng.uniform(a.rot_min_deg, a.rot_max_deg);
      rotations[i][axis] = rng.sign() * magnitude;
    }
  }
  std::vector<double> scales(static_cast<std::size_t>(a.n_scales));
  for (int j = 0; j < a.n_scales; ++j) {
    CounterRng rng = scale_root.split(static_cast<std::uint64_t>(j));
    const double u = rng.uniform(a.scale_min, a.scale_max);
    scales[j] = 1.0 + rng.sign() * u;
  }

  std::vector<AugmentationParams> out;
  out.reserve(rotations.size() * scales.size());
  for (int i = 0; i < a.n_rotations; ++i)
    for (int j = 0; j < a.n_scales; ++j) out.push_back({i, j, rotations[i], scales[j]});
  return out;
}

std::vector<TubeSegment> transform_tubes(std::span<const TubeSegment> tubes,
                                         const Eigen::Matrix3d& rotation, double scale) {
  std::vector<TubeSegment> out;
  out.reserve(tubes.size());
  for (const auto& t : tubes) {
    out.push_back({scale * (rotation * t.a), scale * (rotation * t.b), scale * t.radius_a,
                   scale * t.radius_b});
  }
  return out;
}

std::vector<TubeSegment> scale_tubes(std::span<const TubeSegment> tubes, double k) {
  return transform_tubes(tubes, Eigen::Matrix3d::Identity(), k);
}

std::vector<AugmentedVariant> augment(std::span<const TubeSegment> model,
                                      const AugmentationSpec& a) {
  std::vector<AugmentedVariant> out;
  for (const auto& p : augmentation_params(a)) {
    const Eigen::Vector3d rad = p.rotation_deg * (std::numbers::pi / 180.0);
    out.push_back({p, transform_tubes(model, rotation_xyz(rad.x(), rad.y(), rad.z()), p.scale)});
  }
  return out;
}

nlohmann::json to_json(const PhantomSpec& s) {
  return {{"seed", s.seed},
          {"depth", s.depth},
          {"root_radius", s.root_radius},
          {"taper", s.taper},
          {"branch_angle_range", s.branch_angle_range},
          {"segments_per_branch", s.segments_per_branch},
          {"tortuosity", s.tortuosity},
          {"root_length", s.root_length},
          {"length_ratio", s.length_ratio},
          {"max_extent", s.max_extent}};
}

PhantomSpec phantom_spec_from_json(const nlohmann::json& j, PhantomSpec s) {
  try {
    s.seed = j.value("seed", s.seed);
    s.depth = j.value("depth", s.depth);
    s.root_radius = j.value("root_radius", s.root_radius);
    s.taper = j.value("taper", s.taper);
    s.branch_angle_range = j.value("branch_angle_range", s.branch_angle_range);
    s.segments_per_branch = j.value("segments_per_branch", s.segments_per_branch);
    s.tortuosity = j.value("tortuosity", s.tortuosity);
    s.root_length = j.value("root_length", s.root_length);
    s.length_ratio = j.value("length_ratio", s.length_ratio);
    s.max_extent = j.value("max_extent", s.max_extent);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("phantom spec JSON: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json to_json(const AugmentationSpec& a) {
  return {{"n_rotations", a.n_rotations}, {"n_scales", a.n_scales},
          {"rot_min_deg", a.rot_min_deg}, {"rot_max_deg", a.rot_max_deg},
          {"scale_min", a.scale_min},     {"scale_max", a.scale_max},
          {"seed", a.seed}};
}

AugmentationSpec augmentation_spec_from_json(const nlohmann::json& j, AugmentationSpec a) {
  try {
    a.n_rotations = j.value("n_rotations", a.n_rotations);
    a.n_scales = j.value("n_scales", a.n_scales);
    a.rot_min_deg = j.value("rot_min_deg", a.rot_min_deg);
    a.rot_max_deg = j.value("rot_max_deg", a.rot_max_deg);
    a.scale_min = j.value("scale_min", a.scale_min);
    a.scale_max = j.value("scale_max", a.scale_max);
    a.seed = j.value("seed", a.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("augmentation JSON: ") + e.what());
  }
  a.validate();
  return a;
}

nlohmann::json tubes_to_json(std::span<const TubeSegment> tubes) {
  auto arr = nlohmann::json::array();
  for (const auto& t : tubes) {
    arr.push_back({{"a", {t.a.x(), t.a.y(), t.a.z()}},
                   {"b", {t.b.x(), t.b.y(), t.b.z()}},
                   {"radius_a", t.radius_a},
                   {"radius_b", t.radius_b}});
  }
  return arr;
}

}  // namespace angiorecon
