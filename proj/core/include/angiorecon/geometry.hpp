#pragma once

// Coordinate systems of the angiographic imaging chain.
//
// Frames:
//   world   right-handed, fixed; x toward the patient's left shoulder,
//           y toward the head, z frontal. The imaged object sits at the origin.
//   psp     "perspective" frame, world rotated by the gantry angles. The X-ray
//           travels along +z of this frame.
//   cam     left-handed camera frame, origin at psp (0, 0, L), z flipped.
//   binvox  object cube normalized to [0, 1]^3.
//   vox     binvox scaled by (W - 1); voxel centers sit on integer lattice
//           points 0..W-1, so voxel k covers [k - 0.5, k + 0.5] on each axis.
//   img     2D pixel coordinates; pixel (i, j) covers [i, i+1) x [j, j+1).
//
// Convention: Transform3H<A, B> maps the coordinates of a point expressed in
// frame A to its coordinates in frame B. Matrices are stored row-major.
// Applying a transform to a point tagged with the wrong frame does not compile.

#include <Eigen/Core>
#include <Eigen/LU>

#include <cstdint>

namespace angiorecon {

enum class Frame { world, psp, cam, binvox, vox };

template <Frame F>
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Eigen::Vector3d vec() const { return {x, y, z}; }
  static Point3 from(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }
};

/// Gantry angles in radians. theta rotates about world x (> 0 is LAO,
/// < 0 is RAO); phi rotates about world y (> 0 is CRA, < 0 is CAU).
struct ViewAngles {
  double theta = 0.0;
  double phi = 0.0;

  /// Validated construction; both angles must lie in [-pi/2, pi/2].
  static ViewAngles radians(double theta, double phi);
  static ViewAngles degrees(double theta_deg, double phi_deg);

  double theta_deg() const;
  double phi_deg() const;

  void validate() const;
  bool operator==(const ViewAngles&) const = default;
};

/// Source/sensor distances and sensor intrinsics. Lengths share one unit.
struct ImagingGeometry {
  double L = 4.0;    ///< object center to sensor (camera origin) distance
  double S = 1.0;    ///< side of the object cube
  double f = 1.0;    ///< focal length
  double dx = 0.2 / 32;  ///< pixel pitch on the sensor, = sx / w_img
  double dy = 0.2 / 32;
  double u0 = 16.0;  ///< principal point; always the image center
  double v0 = 16.0;
  double sx = 0.2;   ///< physical sensor size
  double sy = 0.2;
  int w_img = 32;
  int h_img = 32;

  /// Geometry with derived fields (dx, dy, u0, v0) filled in and validated.
  static ImagingGeometry make(double L, double S, double f, double sx,
                              double sy, int w_img, int h_img);

  /// Defaults used throughout: unit cube at L = 4, sensor 0.2 x 0.2 behind
  /// unit focal length. Rays are spaced finer than a 32^3 voxel over the
  /// central region of the cube.
  static ImagingGeometry standard(int w_img = 32, int h_img = 32);

  /// Same sensor, resampled to a different pixel count.
  ImagingGeometry with_image_size(int w, int h) const;

  void validate() const;
  bool operator==(const ImagingGeometry&) const = default;
};

template <Frame From, Frame To>
class Transform3H {
 public:
  using Matrix = Eigen::Matrix<double, 4, 4, Eigen::RowMajor>;

  Transform3H() : m_(Matrix::Identity()) {}
  explicit Transform3H(const Matrix& m) : m_(m) {}

  const Matrix& matrix() const { return m_; }

  Point3<To> operator()(const Point3<From>& p) const {
    const Eigen::Vector4d h = m_ * Eigen::Vector4d(p.x, p.y, p.z, 1.0);
    return {h.x(), h.y(), h.z()};
  }

  /// Applies only the linear block; for direction vectors.
  Eigen::Vector3d direction(const Eigen::Vector3d& d) const {
    return m_.template topLeftCorner<3, 3>() * d;
  }

  Transform3H<To, From> inverse() const {
    return Transform3H<To, From>(Matrix(m_.inverse()));
  }

 private:
  Matrix m_;
};

template <Frame A, Frame B, Frame C>
Transform3H<A, C> operator*(const Transform3H<B, C>& lhs,
                            const Transform3H<A, B>& rhs) {
  return Transform3H<A, C>(
      typename Transform3H<A, C>::Matrix(lhs.matrix() * rhs.matrix()));
}

/// Continuous pixel coordinate.
struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

/// Voxel-to-image projection: an effective 3x4 matrix followed by the
/// perspective divide.
class Projection {
 public:
  using Matrix = Eigen::Matrix<double, 3, 4, Eigen::RowMajor>;

  Projection(const Matrix& m, double degenerate_tolerance)
      : m_(m), tol_(degenerate_tolerance) {}

  const Matrix& matrix() const { return m_; }

  /// Throws NumericalError when the camera depth is within tolerance of 0.
  Pixel operator()(const Point3<Frame::vox>& p) const;
  Pixel project_homogeneous(const Eigen::Vector4d& h) const;

 private:
  Matrix m_;
  double tol_;
};

Transform3H<Frame::world, Frame::psp> world_to_psp(const ViewAngles& v);
Transform3H<Frame::psp, Frame::cam> psp_to_cam(const ImagingGeometry& g);
Transform3H<Frame::psp, Frame::binvox> psp_to_binvox(const ImagingGeometry& g);
Transform3H<Frame::binvox, Frame::vox> binvox_to_vox(int resolution);
Transform3H<Frame::psp, Frame::vox> psp_to_vox(const ImagingGeometry& g,
                                               int resolution);

/// The voxel lattice is attached to the object, which is fixed in world.
/// Its matrix equals psp_to_vox (the two frames agree at zero gantry angle).
Transform3H<Frame::world, Frame::vox> world_to_vox(const ImagingGeometry& g,
                                                   int resolution);

Eigen::Matrix3d cam_to_img(const ImagingGeometry& g);

/// Projects a camera-frame point; throws NumericalError when
/// |z_c| < 1e-9 * L.
Pixel project_cam_point(const ImagingGeometry& g,
                        const Point3<Frame::cam>& p);

/// cam_to_img * psp_to_cam * world_to_psp(v) * inverse(world_to_vox).
/// At theta = phi = 0 this reduces to cam_to_img * psp_to_cam * vox_to_psp.
Projection vox_to_img(const ViewAngles& v, const ImagingGeometry& g,
                      int resolution);

/// Depth below which a projection is rejected as degenerate.
double degenerate_depth(const ImagingGeometry& g);

/// Rotation used for augmentation: Rz(gamma) * Ry(beta) * Rx(alpha).
Eigen::Matrix3d rotation_xyz(double alpha, double beta, double gamma);

}  // namespace angiorecon
