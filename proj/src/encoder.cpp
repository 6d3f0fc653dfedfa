#include "dissect/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "dissect/errors.hpp"
#include "dissect/rng.hpp"

namespace dissect {

void EncoderParams::clamp_tau() { tau = std::clamp(tau, kTauMin, kTauMax); }

Embedding normalize(const Embedding& v) {
  const double norm = std::sqrt(dot(v.values, v.values));
  if (norm < 1e-12) throw ZeroVectorError();
  Embedding out;
  out.values.resize(v.values.size());
  for (std::size_t i = 0; i < v.values.size(); ++i) out.values[i] = v.values[i] / norm;
  return out;
}

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  // Fan-in scaled init keeps pre-normalization outputs O(1).
  std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(static_cast<double>(cols)));
  Matrix m(rows, cols);
  for (auto& x : m.a) x = g(rng);
  return m;
}

}  // namespace

EncoderParams init_encoder(const ModelConfig& cfg, std::uint32_t d_img_in, std::uint32_t d_txt_in,
                           std::uint64_t seed) {
  if (cfg.depth != 1 && cfg.depth != 2)
    throw InvalidConfigError("encoder depth must be 1 or 2");
  if (cfg.embed_dim == 0) throw InvalidConfigError("embed_dim must be positive");
  if (cfg.depth == 2 && cfg.hidden_dim == 0)
    throw InvalidConfigError("hidden_dim must be positive for depth 2");

  auto rng = make_stream(seed, RngStream::kWeightInit);
  EncoderParams p;
  p.tau = cfg.tau_init;
  p.img.depth = cfg.depth;
  p.txt.depth = cfg.depth;
  if (cfg.depth == 1) {
    p.img.w1 = random_matrix(cfg.embed_dim, d_img_in, rng);
    p.txt.w1 = random_matrix(cfg.embed_dim, d_txt_in, rng);
  } else {
    p.img.w1 = random_matrix(cfg.hidden_dim, d_img_in, rng);
    p.img.w2 = random_matrix(cfg.embed_dim, cfg.hidden_dim, rng);
    p.txt.w1 = random_matrix(cfg.hidden_dim, d_txt_in, rng);
    p.txt.w2 = random_matrix(cfg.embed_dim, cfg.hidden_dim, rng);
  }
  p.clamp_tau();
  return p;
}

Embedding encode(const EncoderTower& tower, std::span<const float> input) {
  if (input.size() != tower.input_dim()) {
    throw ShapeMismatchError("encoder expects input dim " + std::to_string(tower.input_dim()) +
                             ", got " + std::to_string(input.size()));
  }
  std::vector<double> x(input.begin(), input.end());
  Embedding raw;
  if (tower.depth == 1) {
    raw.values.resize(tower.w1.rows);
    matvec(tower.w1, x, raw.values);
  } else {
    std::vector<double> z(tower.w1.rows);
    matvec(tower.w1, x, z);
    for (auto& v : z) v = std::max(v, 0.0);
    raw.values.resize(tower.w2.rows);
    matvec(tower.w2, z, raw.values);
  }
  return normalize(raw);
}

std::pair<Embedding, Embedding> forward_encode(const EncoderParams& params,
                                               const PairedSample& sample) {
  return {encode(params.img, sample.img_feat), encode(params.txt, sample.txt_feat)};
}

double clip_score(const Embedding& img, const Embedding& txt, double w) {
  if (img.dim() != txt.dim())
    throw ShapeMismatchError("clip_score embedding dims differ: " + std::to_string(img.dim()) +
                             " vs " + std::to_string(txt.dim()));
  return w * std::max(dot(img.values, txt.values), 0.0);
}

}  // namespace dissect
