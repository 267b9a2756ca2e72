#include "angiorecon/geometry.hpp"

#include "angiorecon/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace angiorecon {
namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

void check_angle(double a, const char* name) {
  if (!std::isfinite(a) || a < -kHalfPi || a > kHalfPi) {
    throw ValidationError(std::string("view angle ") + name + " = " +
                          std::to_string(a) +
                          " rad outside [-pi/2, pi/2]");
  }
}

void check_positive(double value, const char* name) {
  if (!std::isfinite(value) || value <= 0.0) {
    throw ValidationError(std::string("imaging geometry: ") + name +
                          " must be positive, got " + std::to_string(value));
  }
}

}  // namespace

ViewAngles ViewAngles::radians(double theta, double phi) {
  ViewAngles v{theta, phi};
  v.validate();
  return v;
}

ViewAngles ViewAngles::degrees(double theta_deg, double phi_deg) {
  return radians(theta_deg * std::numbers::pi / 180.0,
                 phi_deg * std::numbers::pi / 180.0);
}

namespace {

// Snaps to the nearest 1e-9 degree when within 1e-12, so that angles given
// in degrees print back as given. Never returns -0.
double to_degrees(double rad) {
  const double d = rad * 180.0 / std::numbers::pi;
  const double snapped = std::round(d * 1e9) / 1e9;
  return (std::abs(d - snapped) < 1e-12 ? snapped : d) + 0.0;
}

}  // namespace

double ViewAngles::theta_deg() const { return to_degrees(theta); }
double ViewAngles::phi_deg() const { return to_degrees(phi); }

void ViewAngles::validate() const {
  check_angle(theta, "theta");
  check_angle(phi, "phi");
}

ImagingGeometry ImagingGeometry::make(double L, double S, double f, double sx,
                                      double sy, int w_img, int h_img) {
  ImagingGeometry g;
  g.L = L;
  g.S = S;
  g.f = f;
  g.sx = sx;
  g.sy = sy;
  g.w_img = w_img;
  g.h_img = h_img;
  if (w_img < 1 || h_img < 1) {
    throw ValidationError("imaging geometry: image size must be at least 1x1, got " +
                          std::to_string(w_img) + "x" + std::to_string(h_img));
  }
  g.dx = sx / w_img;
  g.dy = sy / h_img;
  g.u0 = w_img / 2.0;
  g.v0 = h_img / 2.0;
  g.validate();
  return g;
}

ImagingGeometry ImagingGeometry::standard(int w_img, int h_img) {
  return make(4.0, 1.0, 1.0, 0.2, 0.2, w_img, h_img);
}

ImagingGeometry ImagingGeometry::with_image_size(int w, int h) const {
  return make(L, S, f, sx, sy, w, h);
}

void ImagingGeometry::validate() const {
  check_positive(L, "L");
  check_positive(S, "S");
  check_positive(f, "f");
  check_positive(dx, "dx");
  check_positive(dy, "dy");
  check_positive(sx, "sx");
  check_positive(sy, "sy");
  if (w_img < 1 || h_img < 1) {
    throw ValidationError("imaging geometry: image size must be at least 1x1");
  }
  if (!(L > S / 2.0)) {
    throw ValidationError("imaging geometry: sensor distance L = " +
                          std::to_string(L) +
                          " must exceed half the cube side S/2 = " +
                          std::to_string(S / 2.0));
  }
}

Transform3H<Frame::world, Frame::psp> world_to_psp(const ViewAngles& v) {
  v.validate();
  const double ct = std::cos(v.theta), st = std::sin(v.theta);
  const double cp = std::cos(v.phi), sp = std::sin(v.phi);
  // R_y(phi) * R_x(theta): rotate about x first, then about y.
  Transform3H<Frame::world, Frame::psp>::Matrix m;
  m << cp, sp * st, sp * ct, 0.0,
       0.0, ct, -st, 0.0,
       -sp, cp * st, cp * ct, 0.0,
       0.0, 0.0, 0.0, 1.0;
  return Transform3H<Frame::world, Frame::psp>(m);
}

Transform3H<Frame::psp, Frame::cam> psp_to_cam(const ImagingGeometry& g) {
  g.validate();
  Transform3H<Frame::psp, Frame::cam>::Matrix m;
  m << 1.0, 0.0, 0.0, 0.0,
       0.0, 1.0, 0.0, 0.0,
       0.0, 0.0, -1.0, g.L,
       0.0, 0.0, 0.0, 1.0;
  return Transform3H<Frame::psp, Frame::cam>(m);
}

Transform3H<Frame::psp, Frame::binvox> psp_to_binvox(const ImagingGeometry& g) {
  check_positive(g.S, "S");
  const double s = 1.0 / g.S;
  Transform3H<Frame::psp, Frame::binvox>::Matrix m;
  m << s, 0.0, 0.0, 0.5,
       0.0, s, 0.0, 0.5,
       0.0, 0.0, s, 0.5,
       0.0, 0.0, 0.0, 1.0;
  return Transform3H<Frame::psp, Frame::binvox>(m);
}

Transform3H<Frame::binvox, Frame::vox> binvox_to_vox(int resolution) {
  if (resolution < 2) {
    throw ValidationError("voxel resolution must be at least 2, got " +
                          std::to_string(resolution));
  }
  const double k = resolution - 1.0;
  Transform3H<Frame::binvox, Frame::vox>::Matrix m;
  m << k, 0.0, 0.0, 0.0,
       0.0, k, 0.0, 0.0,
       0.0, 0.0, k, 0.0,
       0.0, 0.0, 0.0, 1.0;
  return Transform3H<Frame::binvox, Frame::vox>(m);
}

Transform3H<Frame::psp, Frame::vox> psp_to_vox(const ImagingGeometry& g,
                                               int resolution) {
  return binvox_to_vox(resolution) * psp_to_binvox(g);
}

Transform3H<Frame::world, Frame::vox> world_to_vox(const ImagingGeometry& g,
                                                   int resolution) {
  return Transform3H<Frame::world, Frame::vox>(psp_to_vox(g, resolution).matrix());
}

Eigen::Matrix3d cam_to_img(const ImagingGeometry& g) {
  g.validate();
  Eigen::Matrix3d k;
  k << g.f * g.w_img / g.sx, 0.0, g.w_img / 2.0,
       0.0, -g.f * g.h_img / g.sy, g.h_img / 2.0,
       0.0, 0.0, 1.0;
  return k;
}

double degenerate_depth(const ImagingGeometry& g) { return 1e-9 * g.L; }

Pixel project_cam_point(const ImagingGeometry& g, const Point3<Frame::cam>& p) {
  const Eigen::Vector3d h = cam_to_img(g) * p.vec();
  if (std::abs(h.z()) < degenerate_depth(g)) {
    throw NumericalError("degenerate projection: camera depth " +
                         std::to_string(h.z()) + " is in the sensor plane");
  }
  return {h.x() / h.z(), h.y() / h.z()};
}

Pixel Projection::operator()(const Point3<Frame::vox>& p) const {
  return project_homogeneous(Eigen::Vector4d(p.x, p.y, p.z, 1.0));
}

Pixel Projection::project_homogeneous(const Eigen::Vector4d& h) const {
  const Eigen::Vector3d q = m_ * h;
  // Degeneracy is judged on the dehomogenized depth.
  const double w = h.w();
  const double depth = (w != 0.0) ? q.z() / w : q.z();
  if (w == 0.0 || std::abs(depth) < tol_) {
    throw NumericalError("degenerate projection: camera depth " +
                         std::to_string(depth) + " is in the sensor plane");
  }
  return {q.x() / q.z(), q.y() / q.z()};
}

Projection vox_to_img(const ViewAngles& v, const ImagingGeometry& g,
                      int resolution) {
  const auto vox_to_cam = psp_to_cam(g) * world_to_psp(v) *
                          world_to_vox(g, resolution).inverse();
  const Projection::Matrix m =
      cam_to_img(g) * vox_to_cam.matrix().topRows<3>();
  return Projection(m, degenerate_depth(g));
}

Eigen::Matrix3d rotation_xyz(double alpha, double beta, double gamma) {
  const Eigen::Matrix3d rx =
      (Eigen::Matrix3d() << 1, 0, 0, 0, std::cos(alpha), -std::sin(alpha), 0,
       std::sin(alpha), std::cos(alpha))
          .finished();
  const Eigen::Matrix3d ry =
      (Eigen::Matrix3d() << std::cos(beta), 0, std::sin(beta), 0, 1, 0,
       -std::sin(beta), 0, std::cos(beta))
          .finished();
  const Eigen::Matrix3d rz =
      (Eigen::Matrix3d() << std::cos(gamma), -std::sin(gamma), 0,
       std::sin(gamma), std::cos(gamma), 0, 0, 0, 1)
          .finished();
  return rz * ry * rx;
}

}  // namespace angiorecon
