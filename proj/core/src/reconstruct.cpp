#include "angiorecon/reconstruct.hpp"

#include "angiorecon/geometry_json.hpp"
#include "angiorecon/image_io.hpp"
#include "angiorecon/objective.hpp"
#include "angiorecon/rng.hpp"
#include "angiorecon/voxel_io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <utility>

namespace angiorecon {
namespace {

using Losses = std::vector<std::pair<std::string, double>>;

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Logit state shared by both supervision modes. Frozen voxels never move.
class Problem {
 public:
  virtual ~Problem() = default;

  /// Losses at the current state; `grad` receives d total / d occupancy
  /// scaled to per-element units.
  virtual Losses loss_and_gradient(const VoxelGrid& occupancy, std::vector<double>* grad) const = 0;

  int resolution() const { return resolution_; }
  const std::vector<double>& logits() const { return logits_; }
  std::vector<double>& logits() { return logits_; }
  const std::vector<bool>& frozen() const { return frozen_; }

  VoxelGrid occupancy() const {
    std::vector<double> p(logits_.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = sigmoid(logits_[i]);
    return VoxelGrid(resolution_, std::move(p));
  }

 protected:
  Problem(int resolution, double init_logit)
      : resolution_(resolution),
        logits_(static_cast<std::size_t>(resolution) * resolution * resolution, init_logit),
        frozen_(logits_.size(), false) {}

  void freeze(const std::vector<bool>& observed) {
    for (std::size_t i = 0; i < logits_.size(); ++i) {
      if (!observed[i]) {
        frozen_[i] = true;
        logits_[i] = kUnobservedLogit;
      }
    }
  }

 private:
  int resolution_;
  std::vector<double> logits_;
  std::vector<bool> frozen_;
};

class WeakProblem final : public Problem {
 public:
  WeakProblem(std::span<const SilhouetteImage> targets, std::span<const ViewAngles> views,
              const ImagingGeometry& g, const ReconstructionConfig& cfg)
      : Problem(cfg.resolution, cfg.init_logit), weights_(cfg.view_weights), jobs_(cfg.jobs) {
    if (targets.size() != 2 || views.size() != 2) {
      throw ValidationError("weak supervision needs exactly two targets and two views, got " +
                            std::to_string(targets.size()) + " and " +
                            std::to_string(views.size()));
    }
    g.validate();
    std::vector<bool> observed(logits().size(), true);
    for (std::size_t v = 0; v < 2; ++v) {
      targets[v].validate();
      if (targets[v].width() != g.w_img || targets[v].height() != g.h_img) {
        throw ValidationError("target " + std::to_string(v) + " is " +
                              std::to_string(targets[v].width()) + "x" +
                              std::to_string(targets[v].height()) + " but the geometry casts " +
                              std::to_string(g.w_img) + "x" + std::to_string(g.h_img) + " rays");
      }
      targets_[v] = targets[v];
      rays_[v] = cast_rays(views[v], g, cfg.resolution, g.w_img, g.h_img, cfg.projection, jobs_);
      if (weights_[v] > 0.0) {
        const std::vector<bool> seen = observed_voxels(rays_[v]);
        for (std::size_t i = 0; i < observed.size(); ++i) observed[i] = observed[i] && seen[i];
      }
    }
    freeze(observed);
  }

  Losses loss_and_gradient(const VoxelGrid& occupancy, std::vector<double>* grad) const override {
    Losses out;
    double total = 0.0;
    if (grad) grad->assign(occupancy.size(), 0.0);
    for (std::size_t v = 0; v < 2; ++v) {
      const SilhouetteImage pred = project_soft(occupancy, rays_[v], jobs_);
      const BceResult r = bce_2d(pred, targets_[v]);
      out.emplace_back("bce_view" + std::to_string(v), r.loss);
      total += weights_[v] * r.loss;
      if (grad && weights_[v] > 0.0) {
        const double scale = weights_[v] * static_cast<double>(pred.size());
        std::vector<double> d(r.gradient.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = scale * r.gradient[i];
        const std::vector<double> gv =
backward(occupancy, rays_[v], d, jobs_);
        for (std::size_t i = 0; i < gv.size(); ++i) (*grad)[i] += gv[i];
      }
    }
    out.emplace_back("total", total);
    return out;
  }

  const std::array<SilhouetteImage, 2>& targets() const { return targets_; }
  const std::array<RaySet, 2>& rays() const { return rays_; }

 private:
  std::array<SilhouetteImage, 2> targets_;
  std::array<RaySet, 2> rays_;
  std::array<double, 2> weights_;
  int jobs_;
};

class FullProblem final : public Problem {
 public:
  FullProblem(const VoxelGrid& target, const ReconstructionConfig& cfg)
      : Problem(cfg.resolution, cfg.init_logit), target_(target) {
    if (target.resolution() != cfg.resolution) {
      throw ValidationError("target grid resolution " + std::to_string(target.resolution()) +
                            " does not match configured resolution " +
                            std::to_string(cfg.resolution));
    }
    target.validate();
  }

  Losses loss_and_gradient(const VoxelGrid& occupancy, std::vector<double>* grad) const override {
    BceResult r = bce_3d(occupancy, target_);
    if (grad) {
      const double n = static_cast<double>(r.gradient.size());
      for (double& x : r.gradient) x *= n;
      *grad = std::move(r.gradient);
    }
    return {{"bce_3d", r.loss}, {"total", r.loss}};
  }

 private:
  VoxelGrid target_;
};

bool all_finite(const Losses& losses) {
  for (const auto& [name, v] : losses) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

/// Alternating schedule over independent problems with an optional shared critic.
class Runner {
 public:
  Runner(const ReconstructionConfig& cfg, std::vector<std::unique_ptr<Problem>> problems,
         std::vector<std::string> prefixes, std::span<const VoxelGrid> real_batch)
      : cfg_(cfg), problems_(std::move(problems)), prefixes_(std::move(prefixes)) {
    if (cfg_.lambda_wd > 0.0) {
      if (real_batch.empty()) {
        throw ValidationError("lambda_wd > 0 needs label grids for the critic's real batch");
      }
      for (const auto& g : real_batch) real_features_.push_back(critic_features(g));
      critic_ = CriticParams::random(CounterRng(cfg_.seed).split(1).next_u64(), cfg_.critic_clip);
    }
  }

  ReconstructionReport run() {
    const auto start = std::chrono::steady_clock::now();
    ReconstructionReport report;
    report.termination_reason = "max_iters";
    std::vector<double> grad;
    for (int it = 0; it < cfg_.max_iters; ++it) {
      for (std::size_t k = 0; k < problems_.size(); ++k) {
        generator_step(k, it, grad, report);
      }
      report.iterations = it + 1;
      if (cfg_.lambda_wd > 0.0 && (it + 1) % cfg_.gen_steps_per_critic == 0) {
        std::vector<Eigen::VectorXd> fake;
        for (const auto& p : problems_) fake.push_back(critic_features(p->occupancy()));
        const CriticEvaluation ev = critic_wd(real_features_, fake, critic_);
        report.history.push_back({it, "wd", ev.estimate});
        if (!std::isfinite(ev.estimate)) {
          throw DivergenceError(it, problems_.front()->occupancy(),
                                "non-finite critic estimate at iteration " + std::to_string(it));
        }
        if (ev.estimate <= cfg_.wd_threshold) {
          report.termination_reason = "wd_threshold";
          break;
        }
        critic_ascent_step(critic_, ev.gradient, CriticOptimizer{cfg_.critic_step});
      }
    }
    for (std::size_t k = 0; k < problems_.size(); ++k) {
      const VoxelGrid occ = problems_[k]->occupancy();
      for (const auto& [name, v] : losses_with_critic(*problems_[k], occ, nullptr)) {
        report.final_losses.emplace_back(prefixes_[k] + name, v);
      }
    }
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
  }

  const CriticParams& critic() const { return critic_; }
  Problem& problem(std::size_t k) { return *problems_[k]; }

 private:
  Losses losses_with_critic(const Problem& p, const VoxelGrid& occ,
                            std::vector<double>* grad) const {
    Losses losses = p.loss_and_gradient(occ, grad);
    if (cfg_.lambda_wd > 0.0) {
      const Eigen::VectorXd x = critic_features(occ);
      const double f = critic_forward(critic_, x);
      losses.back().second -= cfg_.lambda_wd * f;
      losses.insert(losses.end() - 1, {"critic", f});
      if (grad) {
        // Mean pooling spreads each feature gradient evenly over its block.
        const int w = occ.resolution();
        const int b = w / 8;
        const double inv_block = 1.0 / (static_cast<double>(b) * b * b);
        const Eigen::VectorXd gx = critic_input_gradient(critic_, x);
        for (int z = 0; z < w; ++z) {
          for (int y = 0; y < w; ++y) {
            for (int xx = 0; xx < w; ++xx) {
              const int feature = xx / b + 8 * (y / b + 8 * (z / b));
              (*grad)[occ.index(xx, y, z)] -= cfg_.lambda_wd * gx(feature) * inv_block;
            }
          }
        }
      }
    }
    return losses;
  }

  void generator_step(std::size_t k, int it, std::vector<double>& grad,
                      ReconstructionReport& report) {
    Problem& p = *problems_[k];
    const VoxelGrid occ = p.occupancy();
    const Losses losses = losses_with_critic(p, occ, &grad);
    for (const auto& [name, v] : losses) report.history.push_back({it, prefixes_[k] + name, v});
    if (!all_finite(losses)) {
      throw DivergenceError(it, occ, "non-finite loss at iteration " + std::to_string(it));
    }
    auto& logits = p.logits();
    const auto& frozen = p.frozen();
    const auto occv = occ.values();
    for (std::size_t i = 0; i < logits.size(); ++i) {
      if (frozen[i]) continue;
      logits[i] -= cfg_.learning_rate * grad[i] * occv[i] * (1.0 - occv[i]);
      if (!std::isfinite(logits[i])) {
        throw DivergenceError(it, occ,
                              "non-finite logit at voxel " + std::to_string(i) +
                                  " after iteration " + std::to_string(it) +
                                  " (learning rate too large?)");
      }
    }
  }

  ReconstructionConfig cfg_;
  std::vector<std::unique_ptr<Problem>> problems_;
  std::vector<std::string> prefixes_;
  std::vector<Eigen::VectorXd> real_features_;
  CriticParams critic_;
};

nlohmann::json view_json(const ViewAngles& v) {
  return {{"theta_deg", v.theta_deg()}, {"phi_deg", v.phi_deg()}};
}

}  // namespace

std::string to_string(Supervision s) {
  return s == Supervision::weak_2d ? "weak_2d" : "full_3d";
}

Supervision supervision_from_string(std::string_view s) {
  if (s == "weak_2d") return Supervision::weak_2d;
  if (s == "full_3d") return Supervision::full_3d;
  throw ValidationError("unknown supervision '" + std::string(s) +
                        "' (expected weak_2d or full_3d)");
}

std::array<ViewAngles, 2> default_views() {
  return {ViewAngles::degrees(30.0, 0.0), ViewAngles::degrees(-30.0, 0.0)};
}

void ReconstructionConfig::validate() const {
  if (resolution < 2) {
    throw ValidationError("resolution must be at least 2, got " + std::to_string(resolution));
  }
  for (const auto& v : views) v.validate();
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning_rate must be positive and finite, got " +
                          std::to_string(learning_rate));
  }
  if (max_iters < 1) {
    throw ValidationError("max_iters must be at least 1, got " + std::to_string(max_iters));
  }
  if (std::isnan(wd_threshold)) throw ValidationError("wd_threshold is NaN");
  if (gen_steps_per_critic < 1) {
    throw ValidationError("gen_steps_per_critic must be at least 1, got " +
                          std::to_string(gen_steps_per_critic));
  }
  if (!(lambda_wd >= 0.0) || !std::isfinite(lambda_wd)) {
    throw ValidationError("lambda_wd must be finite and >= 0, got " + std::to_string(lambda_wd));
  }
  if (lambda_wd > 0.0 && resolution % 8 != 0) {
    throw ValidationError("the critic needs a resolution divisible by 8, got " +
                          std::to_string(resolution));
  }
  for (double w : view_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ValidationError("view weights must be finite and >= 0");
    }
  }
  if (view_weights[0] + view_weights[1] <= 0.0 && supervision == Supervision::weak_2d) {
    throw ValidationError("at least one view weight must be positive");
  }
  if (!std::isfinite(init_logit)) throw ValidationError("init_logit must be finite");
  if (!(critic_clip > 0.0) || !(critic_step > 0.0)) {
    throw ValidationError("critic clip and step must be positive");
  }
}

nlohmann::json to_json(const ReconstructionConfig& cfg) {
  nlohmann::json j;
  j["resolution"] = cfg.resolution;
  j["views"] = {view_json(cfg.views[0]), view_json(cfg.views[1])};
  j["supervision"] = to_string(cfg.supervision);
  j["learning_rate"] = cfg.learning_rate;
  j["max_iters"] = cfg.max_iters;
  // JSON has no infinities; the disabled / always-stop thresholds use strings.
  if (std::isinf(cfg.wd_threshold)) {
    j["wd_threshold"] = cfg.wd_threshold > 0 ? "inf" : "-inf";
  } else {
    j["wd_threshold"] = cfg.wd_threshold;
  }
  j["gen_steps_per_critic"] = cfg.gen_steps_per_critic;
  j["lambda_wd"] = cfg.lambda_wd;
  j["seed"] = cfg.seed;
  j["view_weights"] = cfg.view_weights;
  j["init_logit"] = cfg.init_logit;
  j["projection"] = cfg.projection == ProjectionModel::perspective ? "perspective" : "parallel";
  j["critic_clip"] = cfg.critic_clip;
  j["critic_step"] = cfg.critic_step;
  j["jobs"] = cfg.jobs;
  return j;
}

ReconstructionConfig reconstruction_config_from_json(const nlohmann::json& j,
                                                     ReconstructionConfig c) {
  try {
    if (j.contains("resolution")) c.resolution = j.at("resolution").get<int>();
    if (j.contains("views")) {
      const auto& v = j.at("views");
      if (!v.is_array() || v.size() != 2) {
        throw ValidationError("config 'views' must list exactly two views");
      }
      for (std::size_t i = 0; i < 2; ++i) {
        c.views[i] = ViewAngles::degrees(v[i].at("theta_deg").get<double>(),
                                         v[i].at("phi_deg").get<double>());
      }
    }
    if (j.contains("supervision")) {
      c.supervision = supervision_from_string(j.at("supervision").get<std::string>());
    }
    if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("max_iters")) c.max_iters = j.at("max_iters").get<int>();
    if (j.contains("wd_threshold")) {
      const auto& t = j.at("wd_threshold");
      if (t.is_string()) {
        const auto s = t.get<std::string>();
        if (s == "inf") {
          c.wd_threshold = std::numeric_limits<double>::infinity();
        } else if (s == "-inf") {
          c.wd_threshold = -std::numeric_limits<double>::infinity();
        } else {
          throw ValidationError("wd_threshold '" + s + "' is not a number");
        }
      } else {
        c.wd_threshold = t.get<double>();
      }
    }
    if (j.contains("gen_steps_per_critic")) {
      c.gen_steps_per_critic = j.at("gen_steps_per_critic").get<int>();
    }
    if (j.contains("lambda_wd")) c.lambda_wd = j.at("lambda_wd").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("view_weights")) c.view_weights = j.at("view_weights").get<std::array<double, 2>>();
    if (j.contains("init_logit")) c.init_logit = j.at("init_logit").get<double>();
    if (j.contains("projection")) {
      const auto s = j.at("projection").get<std::string>();
      if (s == "perspective") {
        c.projection = ProjectionModel::perspective;
      } else if (s == "parallel") {
        c.projection = ProjectionModel::parallel;
      } else {
        throw ValidationError("unknown projection '" + s + "'");
      }
    }
    if (j.contains("critic_clip")) c.critic_clip = j.at("critic_clip").get<double>();
    if (j.contains("critic_step")) c.critic_step = j.at("critic_step").get<double>();
    if (j.contains("jobs")) c.jobs = j.at("jobs").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("reconstruction config: ") + e.what());
  }
  c.validate();
  return c;
}

double ReconstructionReport::final_loss(std::string_view name) const {
  for (const auto& [n, v] : final_losses) {
    if (n == name) return v;
  }
  throw ValidationError("no final loss named '" + std::string(name) + "'");
}

nlohmann::json ReconstructionReport::to_json() const {
  nlohmann::json j;
  j["termination_reason"] = termination_reason;
  j["iterations"] = iterations;
  nlohmann::json losses = nlohmann::json::object();
  for (const auto& [n, v] : final_losses) losses[n] = v;
  j["final_losses"] = losses;
  j["iou"] = iou ? nlohmann::json(*iou) : nlohmann::json(nullptr);
  j["containment"] = containment ? nlohmann::json(*containment) : nlohmann::json(nullptr);
  j["wall_time_s"] = wall_time_s;
  return j;
}

std::vector<bool> visual_hull(std::span<const SilhouetteImage> targets,
                              std::span<const RaySet> rays, double threshold) {
  if (targets.size() != rays.size() || targets.empty()) {
    throw ValidationError("visual_hull: need one ray set per target");
  }
  std::vector<bool> hull;
  for (std::size_t v = 0; v < targets.size(); ++v) {
    const std::vector<bool> b = backproject(targets[v], rays[v], threshold);
    if (hull.empty()) {
      hull = b;
    } else {
      if (b.size() != hull.size()) throw ValidationError("visual_hull: ray sets differ in resolution");
      for (std::size_t i = 0; i < hull.size(); ++i) hull[i] = hull[i] && b[i];
    }
  }
  return hull;
}

double containment_fraction(const VoxelGrid& grid, const std::vector<bool>& hull,
                            double threshold) {
  if (hull.size() != grid.size()) {
    throw ValidationError("containment: hull has " + std::to_string(hull.size()) +
                          " voxels, grid has " + std::to_string(grid.size()));
  }
  std::size_t occupied = 0;
  std::size_t inside = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] > threshold) {
      ++occupied;
      if (hull[i]) ++inside;
    }
  }
  return occupied == 0 ? 1.0 : static_cast<double>(inside) / static_cast<double>(occupied);
}

nlohmann::json EvaluationMetrics::to_json() const {
  return {{"iou", iou}, {"view_bce", view_bce}, {"containment", containment}};
}

EvaluationMetrics evaluate(const VoxelGrid& recon, const VoxelGrid& gt,
                           std::span<const ViewAngles> views, const ImagingGeometry& g,
                           ProjectionModel model, int jobs) {
  if (recon.resolution() != gt.resolution()) {
    throw ValidationError("evaluate: reconstruction resolution " +
                          std::to_string(recon.resolution()) + " does not match ground truth " +
                          std::to_string(gt.resolution()));
  }
  if (views.size() != 2) {
    throw ValidationError("evaluate: expected two views, got " + std::to_string(views.size()));
  }
  EvaluationMetrics m;
  m.iou = iou(recon, gt, 0.5);
  std::array<SilhouetteImage, 2> targets;
  std::array<RaySet, 2> rays;
  for (std::size_t v = 0; v < 2; ++v) {
    rays[v] = cast_rays(views[v], g, gt.resolution(), g.w_img, g.h_img, model, jobs);
    targets[v] = project_soft(gt, rays[v], jobs);
    m.view_bce[v] = bce_2d(project_soft(recon, rays[v], jobs), targets[v]).loss;
  }
  m.containment = containment_fraction(recon, visual_hull(targets, rays));
  return m;
}

ReconstructionResult reconstruct_weak(std::span<const SilhouetteImage> targets,
                                      const ImagingGeometry& g, const ReconstructionConfig& cfg,
                                      std::span<const VoxelGrid> real_batch) {
  cfg.validate();
  auto problem = std::make_unique<WeakProblem>(targets, cfg.views, g, cfg);
  const WeakProblem& weak = *problem;
  std::vector<std::unique_ptr<Problem>> problems;
  problems.push_back(std::move(problem));
  Runner runner(cfg, std::move(problems), {""}, real_batch);
  ReconstructionResult out;
  out.report = runner.run();
  out.grid = runner.problem(0).occupancy();
  out.report.containment =
      containment_fraction(out.grid, visual_hull(weak.targets(), weak.rays()));
  return out;
}

ReconstructionResult reconstruct_full(const VoxelGrid& target, const ReconstructionConfig& cfg) {
  cfg.validate();
  std::vector<std::unique_ptr<Problem>> problems;
  problems.push_back(std::make_unique<FullProblem>(target, cfg));
  const VoxelGrid real[] = {target};
  Runner runner(cfg, std::move(problems), {""},
                cfg.lambda_wd > 0.0 ? std::span<const VoxelGrid>(real) : std::span<const VoxelGrid>());
  ReconstructionResult out;
  out.report = runner.run();
  out.grid = runner.problem(0).occupancy();
  out.report.iou = iou(out.grid, target, 0.5);
  return out;
}

std::vector<DatasetEntry> load_dataset(const std::filesystem::path& manifest) {
  const nlohmann::json j = read_json_file(manifest);
  const auto base = manifest.parent_path();
  std::vector<DatasetEntry> out;
  try {
    const auto& entries = j.at("entries");
    if (!entries.is_array() || entries.empty()) {
      throw ValidationError(manifest.string() + ": 'entries' must be a non-empty array");
    }
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const auto& e = entries[k];
      const auto& images = e.at("images");
      if (!images.is_array() || images.size() != 2) {
        throw ValidationError(manifest.string() + ": entry " + std::to_string(k) +
                              " must list exactly two images");
      }
      DatasetEntry d;
      d.name = e.value("name", "entry" + std::to_string(k));
      for (std::size_t v = 0; v < 2; ++v) {
        const auto path = base / images[v].get<std::string>();
        d.images[v] = read_image(path);
        const ImageSidecar side = read_image_sidecar(path);
        if (!side.view) {
          throw ValidationError(sidecar_path(path).string() + ": missing theta_deg/phi_deg");
        }
        d.views[v] = *side.view;
        if (v == 0) {
          d.geometry = side.geometry;
        } else if (!(side.geometry == d.geometry)) {
          throw ValidationError(manifest.string() + ": entry " + std::to_string(k) +
                                " images disagree on geometry");
        }
      }
      if (e.contains("gt") && !e.at("gt").is_null()) {
        d.gt = read_grid(base / e.at("gt").get<std::string>());
      }
      out.push_back(std::move(d));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(manifest.string() + ": " + e.what());
  }
  return out;
}

TrainResult train_loop(const ReconstructionConfig& cfg, std::span<const DatasetEntry> entries) {
  cfg.validate();
  if (entries.empty()) throw ValidationError("train_loop: empty dataset");
  std::vector<std::unique_ptr<Problem>> problems;
  std::vector<std::string> prefixes;
  std::vector<VoxelGrid> real;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const DatasetEntry& e = entries[k];
    if (cfg.supervision == Supervision::full_3d) {
      if (!e.gt) {
        throw ValidationError("entry '" + e.name + "' has no label grid for full_3d supervision");
      }
      problems.push_back(std::make_unique<FullProblem>(*e.gt, cfg));
    } else {
      problems.push_back(std::make_unique<WeakProblem>(e.images, e.views, e.geometry, cfg));
    }
    if (e.gt) {
      if (e.gt->resolution() != cfg.resolution) {
        throw ValidationError("entry '" + e.name + "' label resolution " +
                              std::to_string(e.gt->resolution()) + " does not match " +
                              std::to_string(cfg.resolution));
      }
      real.push_back(*e.gt);
    }
    prefixes.push_back("e" + std::to_string(k) + ".");
  }
  if (cfg.lambda_wd > 0.0 && real.size() != entries.size()) {
    throw ValidationError("lambda_wd > 0 needs a label grid for every entry");
  }
  Runner runner(cfg, std::move(problems), std::move(prefixes), real);
  TrainResult out;
  out.report = runner.run();
  for (std::size_t k = 0; k < entries.size(); ++k) out.grids.push_back(runner.problem(k).occupancy());
  out.critic = runner.critic();
  if (real.size() == entries.size()) {
    double sum = 0.0;
    for (std::size_t k = 0; k < entries.size(); ++k) sum += iou(out.grids[k], real[k], 0.5);
    out.report.iou = sum / static_cast<double>(entries.size());
  }
  return out;
}

void write_loss_csv(std::span<const LossRecord> history, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "iteration,loss_name,value\n";
  char buf[64];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%.17g", r.value);
    out << r.iteration << ',' << r.name << ',' << buf << '\n';
  }
  if (!out) throw ValidationError("write failed for " + path.string());
}

}  // namespace angiorecon
