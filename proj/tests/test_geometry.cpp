#include "angiorecon/error.hpp"
#include "angiorecon/geometry.hpp"
#include "angiorecon/geometry_json.hpp"
#include "angiorecon/render.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace ar = angiorecon;
using ar::Frame;
using ar::Point3;
using std::numbers::pi;

namespace {

constexpr double kTol = 1e-12;

ar::ImagingGeometry geometry() { return ar::ImagingGeometry::standard(); }

template <class M>
double max_abs(const M& m) {
  return m.cwiseAbs().maxCoeff();
}

}  // namespace

TEST(ViewAngles, RejectsOutOfRange) {
  EXPECT_THROW(ar::ViewAngles::radians(pi / 2 + 1e-6, 0.0), ar::ValidationError);
  EXPECT_THROW(ar::ViewAngles::radians(0.0, -pi / 2 - 1e-6), ar::ValidationError);
  EXPECT_NO_THROW(ar::ViewAngles::radians(pi / 2, -pi / 2));
}

TEST(ViewAngles, DegreesPrintBackExactly) {
  const auto v = ar::ViewAngles::degrees(30.0, -15.0);
  EXPECT_EQ(v.theta_deg(), 30.0);
  EXPECT_EQ(v.phi_deg(), -15.0);
}

TEST(ImagingGeometry, SensorMustBeOutsideCube) {
  EXPECT_THROW(ar::ImagingGeometry::make(0.5, 1.0, 1.0, 0.2, 0.2, 32, 32), ar::ValidationError);
  EXPECT_THROW(ar::ImagingGeometry::make(4.0, 1.0, 1.0, 0.2, 0.2, 0, 32), ar::ValidationError);
  EXPECT_THROW(ar::ImagingGeometry::make(4.0, -1.0, 1.0, 0.2, 0.2, 32, 32), ar::ValidationError);
}

TEST(WorldToPsp, ZeroAnglesIsIdentity) {
  const auto t = ar::world_to_psp(ar::ViewAngles{});
  EXPECT_LT(max_abs(t.matrix() - decltype(t)::Matrix::Identity()), kTol);
}

TEST(WorldToPsp, QuarterTurnAboutXMapsYToZ) {
  const auto t = ar::world_to_psp(ar::ViewAngles::radians(pi / 2, 0.0));
  const auto p = t(Point3<Frame::world>{0, 1, 0});
  EXPECT_NEAR(p.x, 0.0, kTol);
  EXPECT_NEAR(p.y, 0.0, kTol);
  EXPECT_NEAR(p.z, 1.0, kTol);
}

TEST(WorldToPsp, MatchesHandComposedRotations) {
  ar::CounterRng rng(11);
  for (int i = 0; i < 200; ++i) {
    const auto v = ar::testing::random_view(rng);
    const double ct = std::cos(v.theta), st = std::sin(v.theta);
    const double cp = std::cos(v.phi), sp = std::sin(v.phi);
    Eigen::Matrix3d expected;
    expected << cp, sp * st, sp * ct,  //
        0, ct, -st,                    //
        -sp, cp * st, cp * ct;
    const auto m = ar::world_to_psp(v).matrix();
    EXPECT_LT(max_abs(m.topLeftCorner<3, 3>() - expected), kTol);
    EXPECT_LT(max_abs(m.topRightCorner<3, 1>()), kTol);
    EXPECT_EQ(m.row(3), Eigen::RowVector4d(0, 0, 0, 1));
  }
}

TEST(WorldToPsp, PropertyOrthonormalWithUnitDeterminant) {
  ar::CounterRng rng(12);
  for (int i = 0; i < 2000; ++i) {
    const auto r = ar::world_to_psp(ar::testing::random_view(rng)).matrix().topLeftCorner<3, 3>();
    EXPECT_LT(max_abs(Eigen::Matrix3d(r.transpose() * r) - Eigen::Matrix3d::Identity()), kTol);
    EXPECT_NEAR(Eigen::Matrix3d(r).determinant(), 1.0, kTol);
  }
}

TEST(PspToCam, MapsOriginToCameraDepthL) {
  const auto g = geometry();
  const auto p = ar::psp_to_cam(g)(Point3<Frame::psp>{0, 0, 0});
  EXPECT_DOUBLE_EQ(p.x, 0.0);
  EXPECT_DOUBLE_EQ(p.y, 0.0);
  EXPECT_DOUBLE_EQ(p.z, g.L);
}

TEST(PspToCam, PointOnSensorPlaneMapsToZeroDepth) {
  const auto g = geometry();
  const auto p = ar::psp_to_cam(g)(Point3<Frame::psp>{1, 2, g.L});
  EXPECT_DOUBLE_EQ(p.x, 1.0);
  EXPECT_DOUBLE_EQ(p.y, 2.0);
  EXPECT_DOUBLE_EQ(p.z, 0.0);
}

TEST(PspToCam, PropertyInvolutionOnPoints) {
  const auto g = geometry();
  const auto m = ar::psp_to_cam(g).matrix();
  EXPECT_LT(max_abs(Eigen::Matrix4d(m * m) - Eigen::Matrix4d::Identity()), kTol);
  ar::CounterRng rng(13);
  for (int i = 0; i < 500; ++i) {
    const Eigen::Vector4d p(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5), 1.0);
    EXPECT_LT(max_abs(Eigen::Vector4d(m * (m * p)) - p), kTol);
  }
}

TEST(PspToBinvox, CubeCenterAndCorners) {
  const auto g = geometry();
  const auto t = ar::psp_to_binvox(g);
  const double h = g.S / 2;
  const auto c = t(Point3<Frame::psp>{0, 0, 0});
  EXPECT_DOUBLE_EQ(c.x, 0.5);
  EXPECT_DOUBLE_EQ(c.y, 0.5);
  EXPECT_DOUBLE_EQ(c.z, 0.5);
  const auto a = t(Point3<Frame::psp>{h, -h, 0});
  EXPECT_DOUBLE_EQ(a.x, 1.0);
  EXPECT_DOUBLE_EQ(a.y, 0.0);
  EXPECT_DOUBLE_EQ(a.z, 0.5);
  const auto b = t(Point3<Frame::psp>{-h, -h, -h});
  EXPECT_DOUBLE_EQ(b.x, 0.0);
  EXPECT_DOUBLE_EQ(b.y, 0.0);
  EXPECT_DOUBLE_EQ(b.z, 0.0);
}

TEST(BinvoxToVox, ScalesByResolutionMinusOne) {
  const auto p = ar::binvox_to_vox(32)(Point3<Frame::binvox>{0.5, 0.5, 0.5});
  EXPECT_DOUBLE_EQ(p.x, 15.5);
  EXPECT_DOUBLE_EQ(p.y, 15.5);
  EXPECT_DOUBLE_EQ(p.z, 15.5);
  const auto q = ar::binvox_to_vox(2)(Point3<Frame::binvox>{1, 1, 1});
  EXPECT_DOUBLE_EQ(q.x, 1.0);
  const auto o = ar::binvox_to_vox(64)(Point3<Frame::binvox>{0, 0, 0});
  EXPECT_DOUBLE_EQ(o.z, 0.0);
  EXPECT_THROW(ar::binvox_to_vox(1), ar::ValidationError);
}

TEST(PspToVox, CenterAndMinimalCorner) {
  for (double s : {0.5, 1.0, 3.0}) {
    const auto g = ar::ImagingGeometry::make(4.0, s, 1.0, 0.2, 0.2, 32, 32);
    const auto t = ar::psp_to_vox(g, 32);
    const auto c = t(Point3<Frame::psp>{0, 0, 0});
    EXPECT_NEAR(c.x, 15.5, kTol);
    EXPECT_NEAR(c.y, 15.5, kTol);
    EXPECT_NEAR(c.z, 15.5, kTol);
    const auto o = t(Point3<Frame::psp>{-s / 2, -s / 2, -s / 2});
    EXPECT_NEAR(o.x, 0.0, kTol);
    EXPECT_NEAR(o.y, 0.0, kTol);
    EXPECT_NEAR(o.z, 0.0, kTol);
  }
}

TEST(PspToVox, PropertyCompositionAndInverse) {
  ar::CounterRng rng(14);
  for (int i = 0; i < 500; ++i) {
    const double s = rng.uniform(0.1, 5.0);
    const int w = 2 + static_cast<int>(rng.uniform() * 200);
    const auto g = ar::ImagingGeometry::make(s + rng.uniform(0.1, 10.0), s, 1.0, 0.2, 0.2, 32, 32);
    const auto composed = ar::binvox_to_vox(w) * ar::psp_to_binvox(g);
    const auto direct = ar::psp_to_vox(g, w);
    EXPECT_LT(max_abs(composed.matrix() - direct.matrix()), kTol * w);
    const auto round = direct.inverse() * direct;
    EXPECT_LT(max_abs(round.matrix() - decltype(round)::Matrix::Identity()), kTol);
    const Point3<Frame::psp> p{rng.uniform(-s, s), rng.uniform(-s, s), rng.uniform(-s, s)};
    const auto back = direct.inverse()(direct(p));
    EXPECT_LT((back.vec() - p.vec()).cwiseAbs().maxCoeff(), kTol);
  }
}

TEST(CamToImg, PrincipalPointAndEdges) {
  const auto g = geometry();
  const auto c = ar::project_cam_point(g, Point3<Frame::cam>{0, 0, 2.5});
  EXPECT_DOUBLE_EQ(c.u, g.w_img / 2.0);
  EXPECT_DOUBLE_EQ(c.v, g.h_img / 2.0);
  const double zc = 3.0;
  const auto e = ar::project_cam_point(g, Point3<Frame::cam>{zc * g.sx / (2 * g.f), 0, zc});
  EXPECT_NEAR(e.u, g.w_img, 1e-12);
  const auto k = ar::cam_to_img(g);
  EXPECT_DOUBLE_EQ(k(0, 0), g.f * g.w_img / g.sx);
  EXPECT_DOUBLE_EQ(k(1, 1), -g.f * g.h_img / g.sy);
  EXPECT_DOUBLE_EQ(k(0, 2), g.w_img / 2.0);
  EXPECT_DOUBLE_EQ(k(1, 2), g.h_img / 2.0);
}

TEST(CamToImg, ScaleInvariantAndDegenerate) {
  const auto g = geometry();
  const auto a = ar::project_cam_point(g, Point3<Frame::cam>{0.1, -0.05, 3.0});
  const auto b = ar::project_cam_point(g, Point3<Frame::cam>{0.2, -0.1, 6.0});
  EXPECT_NEAR(a.u, b.u, kTol);
  EXPECT_NEAR(a.v, b.v, kTol);
  EXPECT_THROW(ar::project_cam_point(g, Point3<Frame::cam>{1.0, 1.0, 0.0}), ar::NumericalError);
  EXPECT_THROW(ar::project_cam_point(g, Point3<Frame::cam>{1.0, 1.0, 1e-10 * g.L}),
               ar::NumericalError);
}

TEST(VoxToImg, GridCenterHitsPrincipalPoint) {
  const auto g = geometry();
  for (int w : {16, 32, 64}) {
    const auto p = ar::vox_to_img(ar::ViewAngles{}, g, w)(
        Point3<Frame::vox>{(w - 1) / 2.0, (w - 1) / 2.0, (w - 1) / 2.0});
    EXPECT_NEAR(p.u, g.w_img / 2.0, kTol);
    EXPECT_NEAR(p.v, g.h_img / 2.0, kTol);
  }
}

TEST(VoxToImg, PropertyProjectiveScaleInvariance) {
  const auto g = geometry();
  ar::CounterRng rng(15);
  for (int i = 0; i < 500; ++i) {
    const auto proj = ar::vox_to_img(ar::testing::random_view(rng), g, 32);
    const Eigen::Vector4d h(rng.uniform(0, 31), rng.uniform(0, 31), rng.uniform(0, 31), 1.0);
    const double lambda = rng.uniform(0.01, 100.0);
    const auto a = proj.project_homogeneous(h);
    const auto b = proj.project_homogeneous(lambda * h);
    EXPECT_NEAR(a.u, b.u, 1e-9);
    EXPECT_NEAR(a.v, b.v, 1e-9);
  }
}

TEST(VoxToImg, SharedPspLineOfSightProjectsToOnePixel) {
  // At zero angles the psp z axis is the optical axis; points on the line
  // through the camera center share a pixel and their depths are ordered.
  const auto g = geometry();
  const int w = 32;
  const auto proj = ar::vox_to_img(ar::ViewAngles{}, g, w);
  const auto to_vox = ar::psp_to_vox(g, w);
  const Eigen::Vector3d cam(0, 0, g.L);
  const Eigen::Vector3d dir(0.01, -0.02, -1.0);
  const auto first = proj(to_vox(Point3<Frame::psp>::from(cam + 3.6 * dir)));
  double last_depth = 0.0;
  for (double t = 3.6; t < 4.4; t += 0.1) {
    const auto pv = to_vox(Point3<Frame::psp>::from(cam + t * dir));
    const auto px = proj(pv);
    EXPECT_NEAR(px.u, first.u, 1e-9);
    EXPECT_NEAR(px.v, first.v, 1e-9);
    const double depth = (proj.matrix() * Eigen::Vector4d(pv.x, pv.y, pv.z, 1)).z();
    EXPECT_GT(depth, last_depth);
    last_depth = depth;
  }
}

TEST(VoxToImg, RecastRayPassesThroughProjectedPoint) {
  const auto g = geometry();
  const int w = 32;
  ar::CounterRng rng(16);
  for (int i = 0; i < 500; ++i) {
    const auto v = ar::testing::random_view(rng);
    const Eigen::Vector3d p(rng.uniform(0, w - 1), rng.uniform(0, w - 1), rng.uniform(0, w - 1));
    const auto px = ar::vox_to_img(v, g, w)(Point3<Frame::vox>::from(p));
    const ar::Ray ray = ar::pixel_ray(v, g, w, px.u, px.v);
    const Eigen::Vector3d d = p - ray.origin;
    const double dist = (d - d.dot(ray.direction) * ray.direction).norm();
    EXPECT_LT(dist, 0.5);
    EXPECT_LT(dist, 1e-9);
  }
}

TEST(GeometryJson, RoundTripAndShorthand) {
  const auto g = ar::ImagingGeometry::make(5.0, 1.5, 2.0, 0.3, 0.25, 64, 48);
  const auto v = ar::ViewAngles::degrees(-25.0, 12.5);
  const auto j = ar::to_json(g, v);
  for (const char* key : {"theta_deg", "phi_deg", "L", "S", "f", "dx", "dy", "sx", "sy", "w_img",
                          "h_img"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(ar::geometry_from_json(j), g);
  EXPECT_EQ(*ar::view_from_json(j), v);

  const auto views = ar::parse_views("lao30cra0,rao30cau10");
  ASSERT_EQ(views.size(), 2u);
  EXPECT_EQ(views[0].theta_deg(), 30.0);
  EXPECT_EQ(views[1].theta_deg(), -30.0);
  EXPECT_EQ(views[1].phi_deg(), -10.0);
  const auto from_json =
      ar::parse_views(R"([{"theta_deg": 30, "phi_deg": 0}, {"theta_deg": -30, "phi_deg": 5}])");
  EXPECT_EQ(from_json[1].phi_deg(), 5.0);
  EXPECT_THROW(ar::parse_views("lao30"), ar::ValidationError);
  EXPECT_THROW(ar::parse_views("lao100cra0"), ar::ValidationError);
}

TEST(GeometryJson, InconsistentPixelPitchRejected) {
  auto j = ar::to_json(geometry());
  j["dx"] = 0.5;
  EXPECT_THROW(ar::geometry_from_json(j), ar::ValidationError);
}
