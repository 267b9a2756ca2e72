#include "commands.hpp"

#include "angiorecon/error.hpp"
#include "angiorecon/geometry_json.hpp"
#include "angiorecon/image_io.hpp"
#include "angiorecon/parallel.hpp"
#include "angiorecon/phantom.hpp"
#include "angiorecon/reconstruct.hpp"
#include "angiorecon/render.hpp"
#include "angiorecon/rng.hpp"
#include "angiorecon/voxel_io.hpp"

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace angiorecon::cli {
namespace {

/// Options shared by every subcommand.
struct Common {
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out = ".";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Seed for all randomness")->capture_default_str();
  cmd->add_option("--jobs", c.jobs, "Worker threads (0 = all cores)")->capture_default_str();
  cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
}

fs::path prepare_out(const Common& c) {
  const fs::path out(c.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw ValidationError("cannot create output directory " + out.string() + ": " + ec.message());
  set_default_jobs(c.jobs);
  return out;
}

nlohmann::json common_json(const std::string& command, const Common& c) {
  return {{"command", command}, {"seed", c.seed}, {"jobs", c.jobs}, {"out", c.out}};
}

ProjectionModel projection_from_string(const std::string& s) {
  if (s == "perspective") return ProjectionModel::perspective;
  if (s == "parallel") return ProjectionModel::parallel;
  throw ValidationError("unknown projection '" + s + "' (expected perspective or parallel)");
}

std::array<ViewAngles, 2> two_views(const std::string& text) {
  const auto v = parse_views(text);
  if (v.size() != 2) {
    throw ValidationError("--views must name exactly two views, got " + std::to_string(v.size()));
  }
  return {v[0], v[1]};
}

nlohmann::json views_json(std::span<const ViewAngles> views) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& v : views) j.push_back({{"theta_deg", v.theta_deg()}, {"phi_deg", v.phi_deg()}});
  return j;
}

VoxelGrid read_grid_checked(const fs::path& path, std::optional<int> resolution) {
  const VoxelGrid g = read_grid(path);
  if (resolution && *resolution != g.resolution()) {
    throw ValidationError("--resolution " + std::to_string(*resolution) +
                          " conflicts with resolution " + std::to_string(g.resolution()) +
                          " in the header of " + path.string());
  }
  return g;
}

// ---------------------------------------------------------------- phantom gen

struct PhantomGenOptions {
  Common common;
  int depth = 3;
  int resolution = 32;
  std::string config;
};

void run_phantom_gen(const PhantomGenOptions& o) {
  const fs::path out = prepare_out(o.common);
  PhantomSpec spec;
  if (!o.config.empty()) spec = phantom_spec_from_json(read_json_file(o.config));
  spec.seed = o.common.seed;
  spec.depth = o.depth;
  spec.validate();
  const ImagingGeometry g = ImagingGeometry::standard();
  const Phantom ph = generate_phantom(spec);
  const VoxelGrid grid = voxelize_tubes(ph.segments, o.resolution, g, o.common.jobs);
  write_grid_with_sidecar(grid, g, out / "phantom.avg");
  write_json_file(out / "tubes.json", tubes_to_json(ph.segments));

  nlohmann::json cfg = common_json("phantom gen", o.common);
  cfg["resolution"] = o.resolution;
  cfg["phantom"] = to_json(spec);
  write_json_file(out / "config.json", cfg);
  spdlog::info("phantom: {} segments, {} occupied voxels at {}^3", ph.segments.size(),
               grid.count_at_least(0.5), o.resolution);
}

// ------------------------------------------------------------ phantom augment

struct AugmentOptions {
  Common common;
  std::string config;
  int models = 44;
};

void run_phantom_augment(AugmentOptions o) {
  const fs::path out = prepare_out(o.common);
  AugmentationSpec a;
  PhantomSpec base;
  if (!o.config.empty()) {
    const nlohmann::json j = read_json_file(o.config);
    a = augmentation_spec_from_json(j.value("augmentation", j));
    if (j.contains("phantom")) base = phantom_spec_from_json(j.at("phantom"));
    if (j.contains("models")) o.models = j.at("models").get<int>();
  }
  if (o.models < 1) throw ValidationError("models must be at least 1, got " + std::to_string(o.models));
  a.seed = o.common.seed;
  a.validate();

  const CounterRng root(o.common.seed);
  nlohmann::json entries = nlohmann::json::array();
  for (int m = 0; m < o.models; ++m) {
    AugmentationSpec am = a;
    am.seed = root.split(2 * static_cast<std::uint64_t>(m)).next_u64();
    const std::uint64_t phantom_seed = root.split(2 * static_cast<std::uint64_t>(m) + 1).next_u64();
    for (const AugmentationParams& p : augmentation_params(am)) {
      entries.push_back({{"model", m},
                         {"phantom_seed", phantom_seed},
                         {"rotation_index", p.rotation_index},
                         {"scale_index", p.scale_index},
                         {"rotation_deg", {p.rotation_deg.x(), p.rotation_deg.y(), p.rotation_deg.z()}},
                         {"scale", p.scale}});
    }
  }
  nlohmann::json manifest;
  manifest["count"] = entries.size();
  manifest["models"] = o.models;
  manifest["augmentation"] = to_json(a);
  manifest["phantom"] = to_json(base);
  manifest["entries"] = std::move(entries);
  write_json_file(out / "manifest.json", manifest);

  nlohmann::json cfg = common_json("phantom augment", o.common);
  cfg["models"] = o.models;
  cfg["augmentation"] = to_json(a);
  cfg["phantom"] = to_json(base);
  write_json_file(out / "config.json", cfg);
  spdlog::info("augmentation manifest: {} entries", manifest["count"].get<std::size_t>());
}

// -------------------------------------------------------------------- project

struct ProjectOptions {
  Common common;
  std::string grid;
  std::string views = "lao30cra0,rao30cau0";
  int image_size = 0;
  std::string projection = "perspective";
};

void run_project(const ProjectOptions& o) {
  const fs::path out = prepare_out(o.common);
  const VoxelGrid grid = read_grid(o.grid);
  const ImagingGeometry base = read_grid_sidecar(o.grid);
  const int size = o.image_size > 0 ? o.image_size : base.w_img;
  const ImagingGeometry g = base.with_image_size(size, size);
  const auto views = parse_views(o.views);
  const ProjectionModel model = projection_from_string(o.projection);
  for (std::size_t k = 0; k < views.size(); ++k) {
    const RaySet rays = cast_rays(views[k], g, grid.resolution(), size, size, model, o.common.jobs);
    const SilhouetteImage img = project_soft(grid, rays, o.common.jobs);
    const fs::path stem = out / ("view" + std::to_string(k));
    write_image(img, fs::path(stem.string() + ".aim"));
    write_pgm(img, fs::path(stem.string() + ".pgm"));
    write_image_sidecar(fs::path(stem.string() + ".aim"), g, views[k]);
  }
  nlohmann::json cfg = common_json("project", o.common);
  cfg["grid"] = o.grid;
  cfg["views"] = views_json(views);
  cfg["image_size"] = size;
  cfg["projection"] = o.projection;
  write_json_file(out / "config.json", cfg);
}

// ---------------------------------------------------------------- reconstruct

/// Flags mirrored into ReconstructionConfig.
struct ReconFlags {
  std::optional<int> resolution;
  std::string views;
  std::string supervision = "weak_2d";
  double learning_rate = 1.0;
  int max_iters = 2000;
  std::string wd_threshold = "-inf";
  double lambda_wd = 0.0;
  int gen_steps_per_critic = 5;
  std::vector<double> view_weights{1.0, 1.0};
  std::string projection = "perspective";
  std::string config;
};

void add_recon_flags(CLI::App* cmd, ReconFlags& f) {
  cmd->add_option("--resolution", f.resolution, "Voxel grid resolution W");
  cmd->add_option("--views", f.views, "Views as JSON or shorthand, e.g. lao30cra0,rao30cau0");
  cmd->add_option("--supervision", f.supervision, "weak_2d or full_3d")->capture_default_str();
  cmd->add_option("--learning-rate", f.learning_rate)->capture_default_str();
  cmd->add_option("--max-iters", f.max_iters)->capture_default_str();
  cmd->add_option("--wd-threshold", f.wd_threshold, "Stop when critic WD <= value (inf, -inf allowed)")
      ->capture_default_str();
  cmd->add_option("--lambda-wd", f.lambda_wd, "Weight of the critic term (0 = off)")->capture_default_str();
  cmd->add_option("--gen-steps-per-critic", f.gen_steps_per_critic)->capture_default_str();
  cmd->add_option("--view-weights", f.view_weights)->expected(2);
  cmd->add_option("--projection", f.projection, "perspective or parallel")->capture_default_str();
  cmd->add_option("--config", f.config, "JSON config; flags given explicitly override it");
}

double parse_threshold(const std::string& s) {
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || std::isnan(v)) throw ValidationError("--wd-threshold '" + s + "' is not a number");
  return v;
}

ReconstructionConfig resolve_config(const ReconFlags& f, const Common& c, const CLI::App* cmd) {
  ReconstructionConfig cfg;
  if (!f.config.empty()) cfg = reconstruction_config_from_json(read_json_file(f.config));
  auto given = [&](const char* name) { return f.config.empty() || cmd->count(name) > 0; };
  if (f.resolution) cfg.resolution = *f.resolution;
  if (!f.views.empty()) cfg.views = two_views(f.views);
  if (given("--supervision")) cfg.supervision = supervision_from_string(f.supervision);
  if (given("--learning-rate")) cfg.learning_rate = f.learning_rate;
  if (given("--max-iters")) cfg.max_iters = f.max_iters;
  if (given("--wd-threshold")) cfg.wd_threshold = parse_threshold(f.wd_threshold);
  if (given("--lambda-wd")) cfg.lambda_wd = f.lambda_wd;
  if (given("--gen-steps-per-critic")) cfg.gen_steps_per_critic = f.gen_steps_per_critic;
  if (given("--view-weights")) cfg.view_weights = {f.view_weights.at(0), f.view_weights.at(1)};
  if (given("--projection")) cfg.projection = projection_from_string(f.projection);
  if (given("--seed")) cfg.seed = c.seed;
  if (given("--jobs")) cfg.jobs = c.jobs;
  return cfg;
}

struct ReconstructOptions {
  Common common;
  ReconFlags flags;
  std::vector<std::string> images;
  std::string gt;
};

void write_run_outputs(const fs::path& out, const ReconstructionReport& report,
                       const nlohmann::json& cfg) {
  write_json_file(out / "report.json", report.to_json());
  write_loss_csv(report.history, out / "losses.csv");
  write_json_file(out / "config.json", cfg);
}

void run_reconstruct(const ReconstructOptions& o, const CLI::App* cmd) {
  const fs::path out = prepare_out(o.common);
  ReconstructionConfig cfg = resolve_config(o.flags, o.common, cmd);
  std::optional<VoxelGrid> gt;
  std::optional<ImagingGeometry> gt_geometry;
  if (!o.gt.empty()) {
    gt = read_grid_checked(o.gt, o.flags.resolution);
    gt_geometry = read_grid_sidecar(o.gt);
    cfg.resolution = gt->resolution();
  }
  cfg.validate();

  nlohmann::json run_cfg = common_json("reconstruct", o.common);
  run_cfg["images"] = o.images;
  run_cfg["gt"] = o.gt.empty() ? nlohmann::json(nullptr) : nlohmann::json(o.gt);

  ReconstructionResult result;
  ImagingGeometry out_geometry = ImagingGeometry::standard();
  try {
    if (cfg.supervision == Supervision::full_3d) {
      if (!gt) throw ValidationError("--supervision full_3d needs --gt <grid>");
      if (!o.images.empty()) spdlog::warn("--images ignored under full_3d supervision");
      out_geometry = *gt_geometry;
      result = reconstruct_full(*gt, cfg);
    } else {
      if (o.images.size() != 2) {
        throw ValidationError("--supervision weak_2d needs exactly two --images, got " +
                              std::to_string(o.images.size()));
      }
      std::array<SilhouetteImage, 2> targets;
      std::optional<ImagingGeometry> geometry;
      std::array<ViewAngles, 2> views{};
      for (std::size_t k = 0; k < 2; ++k) {
        targets[k] = read_image(o.images[k]);
        const ImageSidecar side = read_image_sidecar(o.images[k]);
        if (!side.view) {
          throw ValidationError(sidecar_path(o.images[k]).string() + ": missing theta_deg/phi_deg");
        }
        views[k] = *side.view;
        if (!geometry) {
          geometry = side.geometry;
        } else if (!(*geometry == side.geometry)) {
          throw ValidationError("images " + o.images[0] + " and " + o.images[1] +
                                " were taken with different geometry");
        }
      }
      if (!o.flags.views.empty()) {
        for (std::size_t k = 0; k < 2; ++k) {
          if (std::abs(views[k].theta - cfg.views[k].theta) > 1e-9 ||
              std::abs(views[k].phi - cfg.views[k].phi) > 1e-9) {
            throw ValidationError("--views entry " + std::to_string(k) + " (" +
                                  format_view(cfg.views[k]) + ") disagrees with the sidecar of " +
                                  o.images[k] + " (" + format_view(views[k]) + ")");
          }
        }
      }
      cfg.views = views;
      cfg.validate();
      out_geometry = gt_geometry ? *gt_geometry : geometry->with_image_size(32, 32);
      std::vector<VoxelGrid> real;
      if (gt) real.push_back(*gt);
      result = reconstruct_weak(targets, *geometry, cfg, real);
      if (gt) result.report.iou = iou(result.grid, *gt, 0.5);
    }
  } catch (const DivergenceError& e) {
    const fs::path dump = out / ("diverged_iter" + std::to_string(e.iteration()) + ".avg");
    write_grid(e.grid(), dump);
    spdlog::error("state at divergence written to {}", dump.string());
    throw;
  }
  run_cfg["reconstruction"] = to_json(cfg);
  write_grid_with_sidecar(result.grid, out_geometry, out / "recon.avg");
  write_run_outputs(out, result.report, run_cfg);
  spdlog::info("reconstruct: {} iterations, reason {}", result.report.iterations,
               result.report.termination_reason);
  std::cout << result.report.to_json().dump(2) << '\n';
}

// ------------------------------------------------------------------- evaluate

struct EvaluateOptions {
  Common common;
  std::string recon;
  std::string gt;
  std::string views = "lao30cra0,rao30cau0";
  std::string projection = "perspective";
  std::optional<int> resolution;
};

void run_evaluate(const EvaluateOptions& o) {
  const fs::path out = prepare_out(o.common);
  const VoxelGrid recon = read_grid_checked(o.recon, o.resolution);
  const VoxelGrid gt = read_grid_checked(o.gt, o.resolution);
  if (recon.resolution() != gt.resolution()) {
    throw ValidationError("resolution mismatch: " + o.recon + " is " +
                          std::to_string(recon.resolution()) + "^3, " + o.gt + " is " +
                          std::to_string(gt.resolution()) + "^3");
  }
  const ImagingGeometry g = read_grid_sidecar(o.gt);
  const auto views = two_views(o.views);
  const EvaluationMetrics m =
      evaluate(recon, gt, views, g, projection_from_string(o.projection), o.common.jobs);
  nlohmann::json j = m.to_json();
  j["views"] = views_json(views);
  write_json_file(out / "metrics.json", j);

  nlohmann::json cfg = common_json("evaluate", o.common);
  cfg["recon"] = o.recon;
  cfg["gt"] = o.gt;
  cfg["views"] = views_json(views);
  cfg["projection"] = o.projection;
  write_json_file(out / "config.json", cfg);
  std::cout << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------- train

struct TrainOptions {
  Common common;
  ReconFlags flags;
  std::string manifest;
};

void run_train(const TrainOptions& o, const CLI::App* cmd) {
  const fs::path out = prepare_out(o.common);
  ReconstructionConfig cfg = resolve_config(o.flags, o.common, cmd);
  const std::vector<DatasetEntry> entries = load_dataset(o.manifest);
  if (!o.flags.resolution && entries.front().gt) cfg.resolution = entries.front().gt->resolution();
  cfg.validate();
  TrainResult result;
  try {
    result = train_loop(cfg, entries);
  } catch (const DivergenceError& e) {
    const fs::path dump = out / ("diverged_iter" + std::to_string(e.iteration()) + ".avg");
    write_grid(e.grid(), dump);
    spdlog::error("state at divergence written to {}", dump.string());
    throw;
  }
  for (std::size_t k = 0; k < entries.size(); ++k) {
    write_grid_with_sidecar(result.grids[k], ImagingGeometry::standard(),
                            out / ("e" + std::to_string(k) + ".avg"));
  }
  if (cfg.lambda_wd > 0.0) write_critic(result.critic, out / "critic.bin");
  nlohmann::json run_cfg = common_json("train", o.common);
  run_cfg["manifest"] = o.manifest;
  run_cfg["reconstruction"] = to_json(cfg);
  write_run_outputs(out, result.report, run_cfg);
  std::cout << result.report.to_json().dump(2) << '\n';
}

}  // namespace

std::function<void()> register_commands(CLI::App& app) {
  auto* phantom = app.add_subcommand("phantom", "Synthetic vessel phantoms");
  phantom->require_subcommand(1);

  auto gen = std::make_shared<PhantomGenOptions>();
  auto* gen_cmd = phantom->add_subcommand("gen", "Generate and voxelize one phantom");
  add_common(gen_cmd, gen->common);
  gen_cmd->add_option("--depth", gen->depth, "Branching levels")->capture_default_str();
  gen_cmd->add_option("--resolution", gen->resolution)->capture_default_str();
  gen_cmd->add_option("--config", gen->config, "Phantom parameters as JSON");

  auto aug = std::make_shared<AugmentOptions>();
  auto* aug_cmd = phantom->add_subcommand("augment", "Write the rotation/scale augmentation manifest");
  add_common(aug_cmd, aug->common);
  aug_cmd->add_option("--config", aug->config, "Augmentation parameters as JSON");
  aug_cmd->add_option("--models", aug->models, "Number of base models")->capture_default_str();

  auto proj = std::make_shared<ProjectOptions>();
  auto* proj_cmd = app.add_subcommand("project", "Render silhouettes of a grid");
  add_common(proj_cmd, proj->common);
  proj_cmd->add_option("--grid", proj->grid, "Grid file (.avg with .json sidecar)")->required();
  proj_cmd->add_option("--views", proj->views, "Views as JSON or shorthand")->capture_default_str();
  proj_cmd->add_option("--image-size", proj->image_size, "Square image size (default: sidecar)");
  proj_cmd->add_option("--projection", proj->projection, "perspective or parallel")
      ->capture_default_str();

  auto rec = std::make_shared<ReconstructOptions>();
  auto* rec_cmd = app.add_subcommand("reconstruct", "Recover a grid from two silhouettes or a label");
  add_common(rec_cmd, rec->common);
  add_recon_flags(rec_cmd, rec->flags);
  rec_cmd->add_option("--images", rec->images, "Two target images (.aim with sidecars)");
  rec_cmd->add_option("--gt", rec->gt, "Label grid (required for full_3d and lambda_wd > 0)");

  auto ev = std::make_shared<EvaluateOptions>();
  auto* ev_cmd = app.add_subcommand("evaluate", "Compare a reconstruction with ground truth");
  add_common(ev_cmd, ev->common);
  ev_cmd->add_option("--recon", ev->recon)->required();
  ev_cmd->add_option("--gt", ev->gt)->required();
  ev_cmd->add_option("--views", ev->views)->capture_default_str();
  ev_cmd->add_option("--projection", ev->projection)->capture_default_str();
  ev_cmd->add_option("--resolution", ev->resolution, "Expected resolution of both grids");

  auto tr = std::make_shared<TrainOptions>();
  auto* tr_cmd = app.add_subcommand("train", "Alternating generator/critic schedule over a dataset");
  add_common(tr_cmd, tr->common);
  add_recon_flags(tr_cmd, tr->flags);
  tr_cmd->add_option("--manifest", tr->manifest, "Dataset manifest JSON")->required();

  return [=] {
    if (gen_cmd->parsed()) {
      run_phantom_gen(*gen);
    } else if (aug_cmd->parsed()) {
      run_phantom_augment(*aug);
    } else if (proj_cmd->parsed()) {
      run_project(*proj);
    } else if (rec_cmd->parsed()) {
      run_reconstruct(*rec, rec_cmd);
    } else if (ev_cmd->parsed()) {
      run_evaluate(*ev);
    } else if (tr_cmd->parsed()) {
      run_train(*tr, tr_cmd);
    }
  };
}

}  // namespace angiorecon::cli
