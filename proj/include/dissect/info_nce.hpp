#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dissect/dataset.hpp"
#include "dissect/encoder.hpp"
#include "dissect/linalg.hpp"

namespace dissect {

// Per-tower activations cached by the scoring forward pass, kept so the
// selected sub-batch can be backpropagated without a second forward.
struct TowerForward {
  std::vector<std::vector<double>> input;   // feature vector as doubles
  std::vector<std::vector<double>> pre;     // w1 * x, depth 2 only
  std::vector<std::vector<double>> hidden;  // max(pre, 0), depth 2 only
  std::vector<std::vector<double>> raw;     // pre-normalization output
  std::vector<double> raw_norm;
  std::vector<Embedding> emb;  // normalized
};

struct BatchForward {
  std::vector<std::uint64_t> ids;
  TowerForward img;
  TowerForward txt;
  Matrix sim;                       // sim(i,j) = <img_i, txt_j>
  std::vector<double> clip_scores;  // w * max(sim(i,i), 0)

  std::size_t size() const { return ids.size(); }
};

BatchForward forward_batch(const EncoderParams& params, const Dataset& dataset,
                           std::span<const std::uint32_t> rows, double w);

// Gathers the cached activations of a subset (indices into the batch), and
// the corresponding similarity submatrix.
BatchForward make_sub_forward(const BatchForward& full, std::span<const std::size_t> keep);

// Bidirectional InfoNCE with in-batch negatives: mean of the image-to-text
// and text-to-image cross-entropies at temperature tau. Non-negative; zero
// for a singleton batch.
double info_nce_loss(std::span<const Embedding> img, std::span<const Embedding> txt, double tau);
double info_nce_loss(const Matrix& sim, double tau);

// Mean of a sample's two directional cross-entropy terms; the batch loss is
// the mean of these.
std::vector<double> per_sample_losses(const Matrix& sim, double tau);

struct EncoderGradients {
  Matrix img_w1, img_w2, txt_w1, txt_w2;
  double tau = 0.0;
};

// Analytic gradients of info_nce_loss w.r.t. all weights and tau, including
// the normalization Jacobian.
EncoderGradients info_nce_gradients(const EncoderParams& params, const BatchForward& fwd);
EncoderGradients info_nce_gradients(const EncoderParams& params, const Dataset& dataset,
                                    std::span<const std::uint32_t> rows);

struct PairDiagnostic {
  std::uint64_t id = 0;
  double dloss_dsim = 0.0;  // exact d(loss)/d(sim(i,i))
  double clip_score = 0.0;
};

// Per-pair partial derivative of the batch loss w.r.t. the positive-pair
// similarity, paired with the sample's CLIPScore. Batch size must be >= 2.
std::vector<PairDiagnostic> pair_gradient_diagnostic(const BatchForward& fwd, double tau);
std::vector<PairDiagnostic> pair_gradient_diagnostic(const EncoderParams& params,
                                                     const Dataset& dataset,
                                                     std::span<const std::uint32_t> rows, double w);

}  // namespace dissect
