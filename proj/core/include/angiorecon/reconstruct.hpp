#pragma once

// Per-instance reconstruction: gradient descent on per-voxel logits so that
// the soft projections match two target silhouettes (weak supervision) or
// the occupancy matches a voxel label (full supervision). An optional
// weight-clipped critic adds a Wasserstein term against label grids.

#include "angiorecon/critic.hpp"
#include "angiorecon/error.hpp"
#include "angiorecon/geometry.hpp"
#include "angiorecon/render.hpp"
#include "angiorecon/voxel.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace angiorecon {

enum class Supervision { weak_2d, full_3d };

std::string to_string(Supervision s);
Supervision supervision_from_string(std::string_view s);

/// LAO 30 / CRA 0 and RAO 30 / CAU 0.
std::array<ViewAngles, 2> default_views();

/// Logit assigned to voxels no ray of some view passes through; such voxels
/// carry no signal and stay at occupancy ~1e-13.
inline constexpr double kUnobservedLogit = -30.0;

struct ReconstructionConfig {
  int resolution = 32;
  std::array<ViewAngles, 2> views = default_views();
  Supervision supervision = Supervision::weak_2d;
  double learning_rate = 1.0;
  int max_iters = 2000;
  /// Stop once a critic evaluation gives WD <= this; -inf disables.
  double wd_threshold = -std::numeric_limits<double>::infinity();
  int gen_steps_per_critic = 5;
  double lambda_wd = 0.0;
  std::uint64_t seed = 0;
  /// Per-view weight of the 2D loss; 0 drops a view.
  std::array<double, 2> view_weights{1.0, 1.0};
  double init_logit = -2.0;
  ProjectionModel projection = ProjectionModel::perspective;
  double critic_clip = 0.01;
  double critic_step = 5e-5;
  int jobs = 1;

  void validate() const;
};

nlohmann::json to_json(const ReconstructionConfig& cfg);
ReconstructionConfig reconstruction_config_from_json(const nlohmann::json& j,
                                                     ReconstructionConfig base = {});

struct LossRecord {
  int iteration = 0;
  std::string name;
  double value = 0.0;
};

struct ReconstructionReport {
  std::string termination_reason;  ///< "max_iters" or "wd_threshold"
  int iterations = 0;              ///< generator steps taken
  std::vector<std::pair<std::string, double>> final_losses;
  std::vector<LossRecord> history;
  std::optional<double> iou;
  std::optional<double> containment;
  double wall_time_s = 0.0;

  double final_loss(std::string_view name) const;
  nlohmann::json to_json() const;
};

struct ReconstructionResult {
  VoxelGrid grid;
  ReconstructionReport report;
};

/// Thrown when a loss or logit becomes non-finite. Carries the state that
/// produced it so callers can dump it.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(int iteration, VoxelGrid grid, const std::string& what)
      : NumericalError(what), iteration_(iteration), grid_(std::move(grid)) {}
  int iteration() const { return iteration_; }
  const VoxelGrid& grid() const { return grid_; }

 private:
  int iteration_;
  VoxelGrid grid_;
};

/// Targets must be g.w_img x g.h_img. `real_batch` (label grids for the
/// critic) is required when cfg.lambda_wd > 0.
ReconstructionResult reconstruct_weak(std::span<const SilhouetteImage> targets,
                                      const ImagingGeometry& g, const ReconstructionConfig& cfg,
                                      std::span<const VoxelGrid> real_batch = {});

ReconstructionResult reconstruct_full(const VoxelGrid& target, const ReconstructionConfig& cfg);

/// Voxels that, in every view, lie on some ray whose target pixel exceeds
/// `threshold`.
std::vector<bool> visual_hull(std::span<const SilhouetteImage> targets,
                              std::span<const RaySet> rays, double threshold = 0.5);

/// Fraction of voxels with occupancy > threshold that lie inside `hull`;
/// 1.0 when no voxel exceeds the threshold.
double containment_fraction(const VoxelGrid& grid, const std::vector<bool>& hull,
                            double threshold = 0.5);

struct EvaluationMetrics {
  double iou = 0.0;
  std::array<double, 2> view_bce{};
  double containment = 0.0;

  nlohmann::json to_json() const;
};

/// Targets are the soft renders of `gt` at g.w_img x g.h_img.
EvaluationMetrics evaluate(const VoxelGrid& recon, const VoxelGrid& gt,
                           std::span<const ViewAngles> views, const ImagingGeometry& g,
                           ProjectionModel model = ProjectionModel::perspective, int jobs = 1);

/// One training example: two target images (with their geometry and views)
/// and an optional label grid.
struct DatasetEntry {
  std::array<SilhouetteImage, 2> images;
  std::array<ViewAngles, 2> views;
  ImagingGeometry geometry;
  std::optional<VoxelGrid> gt;
  std::string name;
};

/// Manifest JSON: {"entries": [{"images": [a, b], "gt": g (optional)}, ...]}
/// with paths relative to the manifest. Views and geometry come from the
/// image sidecars.
std::vector<DatasetEntry> load_dataset(const std::filesystem::path& manifest);

struct TrainResult {
  std::vector<VoxelGrid> grids;
  ReconstructionReport report;
  CriticParams critic;
};

/// Every iteration takes one generator step per entry. With lambda_wd > 0
/// the critic (real = all label grids, fake = current grids) is evaluated
/// after every gen_steps_per_critic iterations, the run stops if WD <=
/// wd_threshold, and otherwise the critic takes one ascent step. Loss names
/// are prefixed "e<k>." per entry.
TrainResult train_loop(const ReconstructionConfig& cfg, std::span<const DatasetEntry> entries);

void write_loss_csv(std::span<const LossRecord> history, const std::filesystem::path& path);

}  // namespace angiorecon
