#include "angiorecon/error.hpp"
#include "angiorecon/image_io.hpp"
#include "angiorecon/objective.hpp"
#include "angiorecon/reconstruct.hpp"
#include "angiorecon/voxel_io.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

namespace ar = angiorecon;

namespace {

std::array<ar::SilhouetteImage, 2> render_targets(const ar::VoxelGrid& gt, const ar::ImagingGeometry& g,
                                                  const std::array<ar::ViewAngles, 2>& views) {
  return {ar::project_soft(gt, ar::cast_rays(views[0], g, gt.resolution(), g.w_img, g.h_img)),
          ar::project_soft(gt, ar::cast_rays(views[1], g, gt.resolution(), g.w_img, g.h_img))};
}

std::vector<double> history_of(const ar::ReconstructionReport& r, const std::string& name) {
  std::vector<double> out;
  for (const auto& rec : r.history) {
    if (rec.name == name) out.push_back(rec.value);
  }
  return out;
}

}  // namespace

TEST(ReconstructFull, ReachesTargetWithMonotoneLoss) {
  ar::CounterRng rng(1);
  ar::ReconstructionConfig cfg;
  cfg.supervision = ar::Supervision::full_3d;
  for (int c = 0; c < 20; ++c) {
    cfg.resolution = 8 + 4 * (c % 3);
    const auto target = ar::testing::random_binary_grid(rng, cfg.resolution, rng.uniform());
    const auto result = ar::reconstruct_full(target, cfg);
    EXPECT_GE(ar::iou(result.grid, target), 0.99);
    ASSERT_TRUE(result.report.iou.has_value());
    EXPECT_EQ(*result.report.iou, ar::iou(result.grid, target));
    EXPECT_EQ(result.report.termination_reason, "max_iters");
    const auto losses = history_of(result.report, "bce_3d");
    ASSERT_EQ(losses.size(), static_cast<std::size_t>(cfg.max_iters));
    for (std::size_t i = 1; i < losses.size(); ++i) EXPECT_LE(losses[i], losses[i - 1]);
  }
}

TEST(ReconstructFull, HalfTargetConvergesToHalf) {
  ar::ReconstructionConfig cfg;
  cfg.supervision = ar::Supervision::full_3d;
  cfg.resolution = 8;
  const auto result = ar::reconstruct_full(ar::VoxelGrid(8, 0.5), cfg);
  for (double p : result.grid.values()) EXPECT_NEAR(p, 0.5, 1e-3);
}

TEST(ReconstructFull, ResolutionMismatchRejected) {
  ar::ReconstructionConfig cfg;
  cfg.supervision = ar::Supervision::full_3d;
  cfg.resolution = 16;
  EXPECT_THROW(ar::reconstruct_full(ar::VoxelGrid(8), cfg), ar::ValidationError);
}

TEST(ReconstructWeak, ZeroTargetsGiveEmptyGrid) {
  const auto g = ar::ImagingGeometry::standard();
  ar::ReconstructionConfig cfg;
  cfg.resolution = 16;
  cfg.max_iters = 300;
  const std::array<ar::SilhouetteImage, 2> targets{ar::SilhouetteImage(32, 32), ar::SilhouetteImage(32, 32)};
  const auto result = ar::reconstruct_weak(targets, g, cfg);
  EXPECT_EQ(result.grid.count_at_least(0.5), 0u);
  EXPECT_EQ(ar::iou(result.grid, ar::VoxelGrid(16)), 1.0);
  EXPECT_LT(result.report.final_loss("total"), 0.01);
}

TEST(ReconstructWeak, PhantomIsReprojectedInsideVisualHull) {
  const auto g = ar::ImagingGeometry::standard();
  ar::ReconstructionConfig cfg;
  const auto gt = ar::testing::phantom_grid(3, 32, g);
  const auto targets = render_targets(gt, g, cfg.views);
  const auto result = ar::reconstruct_weak(targets, g, cfg);
  EXPECT_LE(result.report.final_loss("bce_view0"), 0.05);
  EXPECT_LE(result.report.final_loss("bce_view1"), 0.05);
  ASSERT_TRUE(result.report.containment.has_value());
  EXPECT_EQ(*result.report.containment, 1.0);
  EXPECT_EQ(result.report.iterations, cfg.max_iters);

  // Recompute containment from an independently built hull: the
  // intersection of the two silhouette backprojections.
  const std::array<ar::RaySet, 2> rays{ar::cast_rays(cfg.views[0], g, 32, 32, 32),
                                       ar::cast_rays(cfg.views[1], g, 32, 32, 32)};
  const auto b0 = ar::backproject(targets[0], rays[0]);
  const auto b1 = ar::backproject(targets[1], rays[1]);
  for (std::size_t i = 0; i < result.grid.size(); ++i) {
    if (result.grid[i] > 0.5) EXPECT_TRUE(b0[i] && b1[i]) << "voxel " << i;
  }
  // The ground truth itself lies inside its own hull.
  const auto hull = ar::visual_hull(targets, rays);
  EXPECT_EQ(ar::containment_fraction(gt, hull), 1.0);
}

TEST(ReconstructWeak, SingleViewAblationFitsButGeneralizesWorse) {
  const auto g = ar::ImagingGeometry::standard();
  ar::ReconstructionConfig two;
  const auto gt = ar::testing::phantom_grid(5, 32, g);
  const auto targets = render_targets(gt, g, two.views);
  const auto both = ar::reconstruct_weak(targets, g, two);
  ar::ReconstructionConfig one = two;
  one.view_weights = {1.0, 0.0};
  const auto single = ar::reconstruct_weak(targets, g, one);
  EXPECT_LE(single.report.final_loss("bce_view0"), 0.05);
  EXPECT_LT(ar::iou(single.grid, gt), ar::iou(both.grid, gt));
}

TEST(ReconstructWeak, TargetShapeMismatchRejected) {
  const auto g = ar::ImagingGeometry::standard();
  const std::array<ar::SilhouetteImage, 2> targets{ar::SilhouetteImage(16, 16), ar::SilhouetteImage(16, 16)};
  EXPECT_THROW(ar::reconstruct_weak(targets, g, ar::ReconstructionConfig{}), ar::ValidationError);
}

TEST(ReconstructWeak, DivergenceCarriesIterationAndGrid) {
  const auto g = ar::ImagingGeometry::standard();
  ar::ReconstructionConfig cfg;
  cfg.resolution = 16;
  cfg.learning_rate = 1e308;
  const auto gt = ar::testing::phantom_grid(1, 16, g);
  const auto targets = render_targets(gt, g, cfg.views);
  try {
    ar::reconstruct_weak(targets, g, cfg);
    FAIL() << "expected divergence";
  } catch (const ar::DivergenceError& e) {
    EXPECT_GE(e.iteration(), 0);
    EXPECT_EQ(e.grid().resolution(), 16);
  }
}

TEST(ReconstructWeak, PropertyDeterministicAcrossThreadCounts) {
  const auto g = ar::ImagingGeometry::standard();
  ar::ReconstructionConfig cfg;
  cfg.resolution = 16;
  cfg.max_iters = 50;
  const auto targets = render_targets(ar::testing::phantom_grid(2, 16, g), g, cfg.views);
  const auto a = ar::reconstruct_weak(targets, g, cfg);
  cfg.jobs = 3;
  const auto b = ar::reconstruct_weak(targets, g, cfg);
  EXPECT_EQ(a.grid, b.grid);
  EXPECT_EQ(a.report.final_losses, b.report.final_losses);
}

class TrainLoopTest : public ::testing::Test {
 protected:
  void SetUp() override {
    g = ar::ImagingGeometry::standard();
    cfg.resolution = 16;
    cfg.max_iters = 40;
    for (std::uint64_t s = 0; s < 2; ++s) {
      ar::DatasetEntry e;
      e.gt = ar::testing::phantom_grid(10 + s, 16, g);
      e.views = cfg.views;
      e.images = render_targets(*e.gt, g, e.views);
      e.geometry = g;
      e.name = "entry" + std::to_string(s);
      entries.push_back(e);
    }
  }
  ar::ImagingGeometry g;
  ar::ReconstructionConfig cfg;
  std::vector<ar::DatasetEntry> entries;
};

TEST_F(TrainLoopTest, WithoutCriticMatchesIndependentRuns) {
  const auto trained = ar::train_loop(cfg, entries);
  ASSERT_EQ(trained.grids.size(), 2u);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto solo = ar::reconstruct_weak(entries[k].images, g, cfg);
    EXPECT_EQ(trained.grids[k], solo.grid);
    EXPECT_EQ(trained.report.final_loss("e" + std::to_string(k) + ".total"), solo.report.final_loss("total"));
  }
  EXPECT_EQ(trained.report.termination_reason, "max_iters");
  EXPECT_TRUE(trained.report.iou.has_value());
}

TEST_F(TrainLoopTest, InfiniteThresholdStopsAtFirstCriticEvaluation) {
  cfg.lambda_wd = 0.1;
  cfg.wd_threshold = std::numeric_limits<double>::infinity();
  const auto r = ar::train_loop(cfg, entries).report;
  EXPECT_EQ(r.termination_reason, "wd_threshold");
  EXPECT_EQ(r.iterations, cfg.gen_steps_per_critic);
  EXPECT_EQ(history_of(r, "wd").size(), 1u);
}

TEST_F(TrainLoopTest, SingleIterationBoundary) {
  cfg.max_iters = 1;
  const auto r = ar::train_loop(cfg, entries).report;
  EXPECT_EQ(r.termination_reason, "max_iters");
  EXPECT_EQ(r.iterations, 1);
  EXPECT_EQ(history_of(r, "e0.total").size(), 1u);
}

TEST_F(TrainLoopTest, CriticWeightsStayClippedAndLossesLogged) {
  cfg.lambda_wd = 0.5;
  const auto trained = ar::train_loop(cfg, entries);
  EXPECT_LE(trained.critic.max_abs(), cfg.critic_clip);
  EXPECT_EQ(history_of(trained.report, "wd").size(), static_cast<std::size_t>(cfg.max_iters / cfg.gen_steps_per_critic));
  EXPECT_EQ(history_of(trained.report, "e1.critic").size(), static_cast<std::size_t>(cfg.max_iters));

  const auto dir = ar::testing::scratch_dir("loss_csv");
  ar::write_loss_csv(trained.report.history, dir / "losses.csv");
  std::ifstream in(dir / "losses.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "iteration,loss_name,value");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, trained.report.history.size());
}

TEST_F(TrainLoopTest, CriticWithoutLabelsRejected) {
  cfg.lambda_wd = 0.5;
  entries[1].gt.reset();
  EXPECT_THROW(ar::train_loop(cfg, entries), ar::ValidationError);
}

TEST(LoadDataset, ReadsManifestRelativeToItsDirectory) {
  const auto dir = ar::testing::scratch_dir("dataset");
  const auto g = ar::ImagingGeometry::standard();
  const auto views = ar::default_views();
  const auto gt = ar::testing::phantom_grid(4, 16, g);
  const auto imgs = render_targets(gt, g, views);
  std::filesystem::create_directories(dir / "data");
  for (int k = 0; k < 2; ++k) {
    const auto p = dir / "data" / ("v" + std::to_string(k) + ".aim");
    ar::write_image(imgs[k], p);
    ar::write_image_sidecar(p, g, views[k]);
  }
  ar::write_grid(gt, dir / "data" / "gt.avg");
  std::ofstream(dir / "manifest.json")
      << R"({"entries": [{"images": ["data/v0.aim", "data/v1.aim"], "gt": "data/gt.avg"}]})";
  const auto entries = ar::load_dataset(dir / "manifest.json");
  ASSERT_EQ(entries.size(), 1u);
  EXPECT_EQ(entries[0].views[1], views[1]);
  EXPECT_EQ(entries[0].images[0], imgs[0]);
  ASSERT_TRUE(entries[0].gt.has_value());
  EXPECT_EQ(*entries[0].gt, gt);
  std::ofstream(dir / "bad.json") << R"({"entries": [{"images": ["data/missing.aim", "data/v1.aim"]}]})";
  EXPECT_THROW(ar::load_dataset(dir / "bad.json"), ar::ValidationError);
}

TEST(Evaluate, IdentityAndEmptyExamples) {
  const auto g = ar::ImagingGeometry::standard();
  const auto views = ar::default_views();
  const auto gt = ar::testing::phantom_grid(6, 32, g);
  const auto same = ar::evaluate(gt, gt, views, g);
  EXPECT_EQ(same.iou, 1.0);
  EXPECT_EQ(same.containment, 1.0);
  const auto empty = ar::evaluate(ar::VoxelGrid(32), gt, views, g);
  EXPECT_EQ(empty.iou, 0.0);
  EXPECT_THROW(ar::evaluate(ar::VoxelGrid(16), gt, views, g), ar::ValidationError);
}

TEST(Evaluate, AgreesWithDirectRecomputation) {
  const auto g = ar::ImagingGeometry::standard();
  const auto views = ar::default_views();
  ar::CounterRng rng(7);
  const auto gt = ar::testing::phantom_grid(7, 16, g);
  const auto recon = ar::testing::random_grid(rng, 16, 0.0, 0.6);
  const auto m = ar::evaluate(recon, gt, views, g);

  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const bool a = recon[i] >= 0.5, b = gt[i] >= 0.5;
    inter += a && b;
    uni += a || b;
  }
  EXPECT_DOUBLE_EQ(m.iou, static_cast<double>(inter) / static_cast<double>(uni));
  const auto targets = render_targets(gt, g, views);
  for (int k = 0; k < 2; ++k) {
    const auto pred = ar::project_soft(recon, ar::cast_rays(views[k], g, 16, 32, 32));
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double p = std::clamp(pred[i], 1e-7, 1 - 1e-7);
      sum -= targets[k][i] * std::log(p) + (1 - targets[k][i]) * std::log(1 - p);
    }
    EXPECT_NEAR(m.view_bce[k], sum / static_cast<double>(pred.size()), 1e-12);
  }
  EXPECT_GE(m.containment, 0.0);
  EXPECT_LE(m.containment, 1.0);
}

TEST(ReconstructionConfig, JsonRoundTripWithInfiniteThreshold) {
  ar::ReconstructionConfig cfg;
  cfg.wd_threshold = std::numeric_limits<double>::infinity();
  cfg.lambda_wd = 0.25;
  cfg.views = {ar::ViewAngles::degrees(10, 20), ar::ViewAngles::degrees(-40, 5)};
  const auto back = ar::reconstruction_config_from_json(ar::to_json(cfg));
  EXPECT_EQ(back.wd_threshold, cfg.wd_threshold);
  EXPECT_EQ(back.lambda_wd, 0.25);
  EXPECT_EQ(ar::to_json(back), ar::to_json(cfg));
  ar::ReconstructionConfig bad;
  bad.learning_rate = 0.0;
  EXPECT_THROW(bad.validate(), ar::ValidationError);
  bad = {};
  bad.max_iters = 0;
  EXPECT_THROW(bad.validate(), ar::ValidationError);
}
