#include "angiorecon/critic.hpp"

#include "angiorecon/error.hpp"
#include "angiorecon/geometry_json.hpp"
#include "angiorecon/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

namespace angiorecon {
namespace {

constexpr auto leaky = [](double z) { return z > 0.0 ? z : kLeakySlope * z; };
constexpr auto leaky_slope = [](double z) { return z > 0.0 ? 1.0 : kLeakySlope; };

struct Activations {
  Eigen::VectorXd z1, a1, z2, a2;
  double out = 0.0;
};

Activations forward(const CriticParams& p, const Eigen::VectorXd& x) {
  if (x.size() != kCriticInput) {
    throw ValidationError("critic input has " + std::to_string(x.size()) + " features, expected " +
                          std::to_string(kCriticInput));
  }
  Activations a;
  a.z1 = p.w1 * x + p.b1;
  a.a1 = a.z1.unaryExpr(leaky);
  a.z2 = p.w2 * a.a1 + p.b2;
  a.a2 = a.z2.unaryExpr(leaky);
  a.out = (p.w3 * a.a2)(0) + p.b3(0);
  return a;
}

template <class F>
void for_each_block(CriticParams& p, F&& f) {
  f(p.w1);
  f(p.b1);
  f(p.w2);
  f(p.b2);
  f(p.w3);
  f(p.b3);
}

template <class F>
void for_each_block(const CriticParams& p, F&& f) {
  f(p.w1);
  f(p.b1);
  f(p.w2);
  f(p.b2);
  f(p.w3);
  f(p.b3);
}

}  // namespace

CriticParams CriticParams::random(std::uint64_t seed, double clip) {
  CriticParams p;
  p.clip = clip;
  p.validate();
  CounterRng rng(seed);
  for_each_block(p, [&](auto& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-clip, clip);
    }
  });
  return p;
}

void CriticParams::clip_weights() {
  for_each_block(*this, [&](auto& m) { m = m.cwiseMax(-clip).cwiseMin(clip); });
}

double CriticParams::max_abs() const {
  double m = 0.0;
  for_each_block(*this, [&](const auto& b) { m = std::max(m, b.cwiseAbs().maxCoeff()); });
  return m;
}

std::size_t CriticParams::parameter_count() const {
  std::size_t n = 0;
  for_each_block(*this, [&](const auto& b) { n += static_cast<std::size_t>(b.size()); });
  return n;
}

std::vector<double> CriticParams::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for_each_block(*this, [&](const auto& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
    }
  });
  return out;
}

void CriticParams::unflatten(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw ValidationError("critic parameter vector has " + std::to_string(flat.size()) +
                          " values, expected " + std::to_string(parameter_count()));
  }
  std::size_t i = 0;
  for_each_block(*this, [&](auto& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = flat[i++];
    }
  });
}

void CriticParams::validate() const {
  if (!(clip > 0.0) || !std::isfinite(clip)) {
    throw ValidationError("critic clip bound must be positive and finite, got " +
                          std::to_string(clip));
  }
  if (w1.rows() != kCriticHidden || w1.cols() != kCriticInput || b1.size() != kCriticHidden ||
      w2.rows() != kCriticHidden || w2.cols() != kCriticHidden || b2.size() != kCriticHidden ||
      w3.rows() != 1 || w3.cols() != kCriticHidden || b3.size() != 1) {
    throw ValidationError("critic parameter shapes do not match 512-64-64-1");
  }
}

void CriticOptimizer::validate() const {
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw ValidationError("critic step must be positive, got " + std::to_string(step));
  }
}

Eigen::VectorXd critic_features(const VoxelGrid& grid) {
  const int w = grid.resolution();
  if (w < 8 || w % 8 != 0) {
    throw ValidationError("critic input needs a resolution divisible by 8, got " +
                          std::to_string(w));
  }
  const VoxelGrid pooled = downsample(grid, w / 8);
  const auto v = pooled.values();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double critic_forward(const CriticParams& p, const Eigen::VectorXd& x) {
  return forward(p, x).out;
}

Eigen::VectorXd critic_input_gradient(const CriticParams& p, const Eigen::VectorXd& x) {
  const Activations a = forward(p, x);
  const Eigen::VectorXd d2 = (p.w3.row(0).transpose().array() *
                              a.z2.unaryExpr(leaky_slope).array()).matrix();
  const Eigen::VectorXd d1 =
      ((p.w2.transpose() * d2).array() * a.z1.unaryExpr(leaky_slope).array()).matrix();
  return p.w1.transpose() * d1;
}

CriticEvaluation critic_wd(std::span<const Eigen::VectorXd> real,
                           std::span<const Eigen::VectorXd> fake, const CriticParams& p) {
  if (real.empty() || fake.empty()) {
    throw ValidationError("critic_wd: empty batch (real " + std::to_string(real.size()) +
                          ", fake " + std::to_string(fake.size()) + ")");
  }
  // Whole batch as columns; column j carries weight s_j = +1/n_real or -1/n_fake.
  const auto n = static_cast<Eigen::Index>(real.size() + fake.size());
  Eigen::MatrixXd x(kCriticInput, n);
  Eigen::VectorXd s(n);
  Eigen::Index col = 0;
  for (const auto& v : real) {
    if (v.size() != kCriticInput) throw ValidationError("critic_wd: real sample has wrong size");
    x.col(col) = v;
    s(col++) = 1.0 / static_cast<double>(real.size());
  }
  for (const auto& v : fake) {
    if (v.size() != kCriticInput) throw ValidationError("critic_wd: fake sample has wrong size");
    x.col(col) = v;
    s(col++) = -1.0 / static_cast<double>(fake.size());
  }
  const Eigen::MatrixXd z1 = (p.w1 * x).colwise() + p.b1;
  const Eigen::MatrixXd a1 = z1.unaryExpr(leaky);
  const Eigen::MatrixXd z2 = (p.w2 * a1).colwise() + p.b2;
  const Eigen::MatrixXd a2 = z2.unaryExpr(leaky);
  const Eigen::RowVectorXd out = (p.w3 * a2).array() + p.b3(0);

  CriticEvaluation e;
  e.gradient.clip = p.clip;
  double sum_real = 0.0;
  double sum_fake = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) (j < static_cast<Eigen::Index>(real.size()) ? sum_real : sum_fake) += out(j);
  e.estimate = sum_real / static_cast<double>(real.size()) -
               sum_fake / static_cast<double>(fake.size());

  e.gradient.w3 = (a2 * s).transpose();
  e.gradient.b3(0) = s.sum();
  const Eigen::MatrixXd d2 =
      ((p.w3.transpose() * s.transpose()).array() * z2.unaryExpr(leaky_slope).array()).matrix();
  e.gradient.w2 = d2 * a1.transpose();
  e.gradient.b2 = d2.rowwise().sum();
  const Eigen::MatrixXd d1 =
      ((p.w2.transpose() * d2).array() * z1.unaryExpr(leaky_slope).array()).matrix();
  e.gradient.w1 = d1 * x.transpose();
  e.gradient.b1 = d1.rowwise().sum();
  return e;
}

CriticEvaluation critic_wd(std::span<const VoxelGrid> real, std::span<const VoxelGrid> fake,
                           const CriticParams& p) {
  std::vector<Eigen::VectorXd> fr, ff;
  fr.reserve(real.size());
  ff.reserve(fake.size());
  for (const auto& g : real) fr.push_back(critic_features(g));
  for (const auto& g : fake) ff.push_back(critic_features(g));
  return critic_wd(fr, ff, p);
}

void critic_ascent_step(CriticParams& p, const CriticParams& gradient,
                        const CriticOptimizer& opt) {
  opt.validate();
  p.w1 += opt.step * gradient.w1;
  p.b1 += opt.step * gradient.b1;
  p.w2 += opt.step * gradient.w2;
  p.b2 += opt.step * gradient.b2;
  p.w3 += opt.step * gradient.w3;
  p.b3 += opt.step * gradient.b3;
  p.clip_weights();
}

double critic_slope_bound_1d(const CriticParams& p, double lo, double hi, int samples) {
  if (samples < 2 || !(hi > lo)) {
    throw ValidationError("critic_slope_bound_1d: need hi > lo and at least 2 samples");
  }
  double best = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double s = lo + (hi - lo) * i / (samples - 1);
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(kCriticInput, s);
    best = std::max(best, std::abs(critic_input_gradient(p, x).sum()));
  }
  return best;
}

void write_critic(const CriticParams& p, const std::filesystem::path& path) {
  p.validate();
  const std::vector<double> flat = p.flatten();
  std::string buf;
  buf.reserve(4 * flat.size());
  for (double v : flat) {
    const auto u = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int k = 0; k < 4; ++k) buf.push_back(static_cast<char>((u >> (8 * k)) & 0xFF));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw ValidationError("write failed for " + path.string());

  nlohmann::json manifest;
  manifest["format"] = "float32-le";
  manifest["clip"] = p.clip;
  manifest["leaky_slope"] = kLeakySlope;
  manifest["layers"] = nlohmann::json::array();
  auto layer = [&](const char* name, Eigen::Index rows, Eigen::Index cols) {
    manifest["layers"].push_back({{"name", name}, {"shape", {rows, cols}}});
  };
  layer("w1", p.w1.rows(), p.w1.cols());
  layer("b1", p.b1.size(), 1);
  layer("w2", p.w2.rows(), p.w2.cols());
  layer("b2", p.b2.size(), 1);
  layer("w3", p.w3.rows(), p.w3.cols());
  layer("b3", p.b3.size(), 1);
  write_json_file(std::filesystem::path(path.string() + ".json"), manifest);
}

CriticParams read_critic(const std::filesystem::path& path) {
  const std::filesystem::path manifest_path(path.string() + ".json");
  if (!std::filesystem::exists(manifest_path)) {
    throw ValidationError("missing critic manifest " + manifest_path.string());
  }
  const nlohmann::json m = read_json_file(manifest_path);
  CriticParams p;
  try {
    p.clip = m.at("clip").get<double>();
    static constexpr const char* kNames[] = {"w1", "b1", "w2", "b2", "w3", "b3"};
    const std::vector<std::array<Eigen::Index, 2>> expected = {
        {p.w1.rows(), p.w1.cols()}, {p.b1.size(), 1}, {p.w2.rows(), p.w2.cols()},
        {p.b2.size(), 1},           {p.w3.rows(), p.w3.cols()}, {p.b3.size(), 1}};
    const auto& layers = m.at("layers");
    if (layers.size() != expected.size()) throw FormatError("wrong layer count");
    for (std::size_t i = 0; i < expected.size(); ++i) {
      const auto shape = layers[i].at("shape").get<std::array<Eigen::Index, 2>>();
      if (layers[i].at("name").get<std::string>() != kNames[i] || shape != expected[i]) {
        throw FormatError(std::string("layer ") + kNames[i] + " shape mismatch");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  const std::vector<char> bytes{std::istreambuf_iterator<char>(in),
                                std::istreambuf_iterator<char>()};
  const std::size_t n = p.parameter_count();
  if (bytes.size() != 4 * n) {
    throw FormatError(path.string() + ": expected " + std::to_string(4 * n) + " bytes, got " +
                      std::to_string(bytes.size()));
  }
  std::vector<double> flat(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t u = 0;
    for (int k = 0; k < 4; ++k) {
      u |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 * i + k])) << (8 * k);
    }
    flat[i] = std::bit_cast<float>(u);
  }
  p.unflatten(flat);
  p.validate();
  return p;
}

}  // namespace angiorecon
