#pragma once

#include <cstdint>
#include <span>
#include <utility>

#include "dissect/dataset.hpp"
#include "dissect/linalg.hpp"

namespace dissect {

// A d_emb-dimensional representation; unit Euclidean norm after normalize().
struct Embedding {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
};

// Returns v scaled to unit norm. Throws ZeroVectorError when |v| < 1e-12.
Embedding normalize(const Embedding& v);

// Projection head over precomputed features: depth 1 is a single linear map
// w1 (d_emb x d_in); depth 2 inserts a hidden layer with elementwise
// max(x, 0), so w1 is (d_hidden x d_in) and w2 is (d_emb x d_hidden).
struct EncoderTower {
  int depth = 1;
  Matrix w1;
  Matrix w2;

  std::size_t input_dim() const { return w1.cols; }
  std::size_t output_dim() const { return depth == 2 ? w2.rows : w1.rows; }
};

struct EncoderParams {
  static constexpr double kTauMin = 0.01;
  static constexpr double kTauMax = 1.0;

  EncoderTower img;
  EncoderTower txt;
  double tau = 0.07;

  void clamp_tau();
  std::size_t embed_dim() const { return img.output_dim(); }
};

struct ModelConfig {
  std::uint32_t embed_dim = 32;
  int depth = 2;
  std::uint32_t hidden_dim = 64;
  double tau_init = 0.07;
};

EncoderParams init_encoder(const ModelConfig& cfg, std::uint32_t d_img_in, std::uint32_t d_txt_in,
                           std::uint64_t seed);

// Projects one feature vector and normalizes. Throws ShapeMismatchError when
// the input length does not match the tower, ZeroVectorError on a collapsed
// output.
Embedding encode(const EncoderTower& tower, std::span<const float> input);

std::pair<Embedding, Embedding> forward_encode(const EncoderParams& params,
                                               const PairedSample& sample);

// w * max(<img, txt>, 0); both embeddings must be unit-norm. Result in [0, w].
double clip_score(const Embedding& img, const Embedding& txt, double w);

}  // namespace dissect
