#include "dissect/info_nce.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dissect/errors.hpp"

namespace dissect {

namespace {

void check_tau(double tau) {
  if (!(tau > 0.0)) throw InvalidConfigError("tau must be positive");
}

struct Softmaxes {
  Matrix row;  // softmax of sim/tau over j for each row i
  Matrix col;  // softmax of sim/tau over i for each column j
};

Softmaxes softmaxes(const Matrix& sim, double tau) {
  const std::size_t n = sim.rows;
  Softmaxes s{Matrix(n, n), Matrix(n, n)};
  for (std::size_t i = 0; i < n; ++i) {
    double m = -1e300;
    for (std::size_t j = 0; j < n; ++j) m = std::max(m, sim(i, j) / tau);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(sim(i, j) / tau - m);
    for (std::size_t j = 0; j < n; ++j) s.row(i, j) = std::exp(sim(i, j) / tau - m) / z;
  }
  for (std::size_t j = 0; j < n; ++j) {
    double m = -1e300;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, sim(i, j) / tau);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) z += std::exp(sim(i, j) / tau - m);
    for (std::size_t i = 0; i < n; ++i) s.col(i, j) = std::exp(sim(i, j) / tau - m) / z;
  }
  return s;
}

// d(loss)/d(sim(i,j)) for the dual-direction mean loss.
Matrix loss_sim_gradient(const Matrix& sim, double tau) {
  const std::size_t n = sim.rows;
  const auto s = softmaxes(sim, tau);
  Matrix g(n, n);
  const double scale = 1.0 / (2.0 * static_cast<double>(n) * tau);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double diag = i == j ? 2.0 : 0.0;
      g(i, j) = (s.row(i, j) + s.col(i, j) - diag) * scale;
    }
  }
  return g;
}

void forward_tower(const EncoderTower& tower, const Dataset& dataset,
                   std::span<const std::uint32_t> rows, bool image_side, TowerForward& out) {
  const std::size_t n = rows.size();
  out.input.resize(n);
  out.raw.resize(n);
  out.raw_norm.resize(n);
  out.emb.resize(n);
  if (tower.depth == 2) {
    out.pre.resize(n);
    out.hidden.resize(n);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = dataset.samples[rows[i]];
    const auto& feat = image_side ? s.img_feat : s.txt_feat;
    if (feat.size() != tower.input_dim()) {
      throw ShapeMismatchError("feature dim " + std::to_string(feat.size()) +
                               " does not match encoder input dim " +
                               std::to_string(tower.input_dim()));
    }
    auto& x = out.input[i];
    x.assign(feat.begin(), feat.end());
    auto& u = out.raw[i];
    if (tower.depth == 1) {
      u.resize(tower.w1.rows);
      matvec(tower.w1, x, u);
    } else {
      auto& z = out.pre[i];
      z.resize(tower.w1.rows);
      matvec(tower.w1, x, z);
      auto& h = out.hidden[i];
      h = z;
      for (auto& v : h) v = std::max(v, 0.0);
      u.resize(tower.w2.rows);
      matvec(tower.w2, h, u);
    }
    const double norm = std::sqrt(dot(u, u));
    if (norm < 1e-12) throw ZeroVectorError();
    out.raw_norm[i] = norm;
    out.emb[i].values.resize(u.size());
    for (std::size_t d = 0; d < u.size(); ++d) out.emb[i].values[d] = u[d] / norm;
  }
}

// Backpropagates d(loss)/d(embedding) through normalization and the tower,
// accumulating weight gradients.
void backward_tower(const EncoderTower& tower, const TowerForward& fwd,
                    const std::vector<std::vector<double>>& demb, Matrix& dw1, Matrix& dw2) {
  const std::size_t d_emb = tower.output_dim();
  std::vector<double> du(d_emb);
  std::vector<double> dh, dz;
  for (std::size_t i = 0; i < fwd.emb.size(); ++i) {
    const auto& f = fwd.emb[i].values;
    const auto& df = demb[i];
    // u = raw, f = u/|u|: du = (df - f (f.df)) / |u|
    const double fdf = dot(f, df);
    for (std::size_t d = 0; d < d_emb; ++d) du[d] = (df[d] - f[d] * fdf) / fwd.raw_norm[i];
    if (tower.depth == 1) {
      add_outer(dw1, du, fwd.input[i]);
    } else {
      add_outer(dw2, du, fwd.hidden[i]);
      dh.resize(tower.w2.cols);
      matvec_transpose(tower.w2, du, dh);
      dz = dh;
      for (std::size_t d = 0; d < dz.size(); ++d)
        if (fwd.pre[i][d] <= 0.0) dz[d] = 0.0;
      add_outer(dw1, dz, fwd.input[i]);
    }
  }
}

}  // namespace

BatchForward forward_batch(const EncoderParams& params, const Dataset& dataset,
                           std::span<const std::uint32_t> rows, double w) {
  if (rows.empty()) throw EmptyBatchError();
  BatchForward out;
  out.ids.reserve(rows.size());
  for (auto r : rows) out.ids.push_back(dataset.samples[r].id);
  forward_tower(params.img, dataset, rows, true, out.img);
  forward_tower(params.txt, dataset, rows, false, out.txt);
  const std::size_t n = rows.size();
  out.sim = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out.sim(i, j) = dot(out.img.emb[i].values, out.txt.emb[j].values);
  out.clip_scores.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.clip_scores[i] = w * std::max(out.sim(i, i), 0.0);
  return out;
}

BatchForward make_sub_forward(const BatchForward& full, std::span<const std::size_t> keep) {
  if (keep.empty()) throw EmptyBatchError();
  BatchForward out;
  const std::size_t n = keep.size();
  auto gather_tower = [&](const TowerForward& src, TowerForward& dst) {
    dst.input.resize(n);
    dst.raw.resize(n);
    dst.raw_norm.resize(n);
    dst.emb.resize(n);
    if (!src.pre.empty()) {
      dst.pre.resize(n);
      dst.hidden.resize(n);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = keep[i];
      dst.input[i] = src.input[k];
      dst.raw[i] = src.raw[k];
      dst.raw_norm[i] = src.raw_norm[k];
      dst.emb[i] = src.emb[k];
      if (!src.pre.empty()) {
        dst.pre[i] = src.pre[k];
        dst.hidden[i] = src.hidden[k];
      }
    }
  };
  out.ids.resize(n);
  out.clip_scores.resize(n);
  out.sim = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    out.ids[i] = full.ids[keep[i]];
    out.clip_scores[i] = full.clip_scores[keep[i]];
    for (std::size_t j = 0; j < n; ++j) out.sim(i, j) = full.sim(keep[i], keep[j]);
  }
  gather_tower(full.img, out.img);
  gather_tower(full.txt, out.txt);
  return out;
}

double info_nce_loss(const Matrix& sim, double tau) {
  check_tau(tau);
  const std::size_t n = sim.rows;
  if (n == 0) throw EmptyBatchError();
  double total = 0.0;
  // image -> text: each row contrasts its diagonal against the row.
  for (std::size_t i = 0; i < n; ++i) {
    double m = -1e300;
    for (std::size_t j = 0; j < n; ++j) m = std::max(m, sim(i, j) / tau);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(sim(i, j) / tau - m);
    total += m + std::log(z) - sim(i, i) / tau;
  }
  // text -> image: columns.
  for (std::size_t j = 0; j < n; ++j) {
    double m = -1e300;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, sim(i, j) / tau);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) z += std::exp(sim(i, j) / tau - m);
    total += m + std::log(z) - sim(j, j) / tau;
  }
  return total / (2.0 * static_cast<double>(n));
}

double info_nce_loss(std::span<const Embedding> img, std::span<const Embedding> txt, double tau) {
  if (img.empty() || txt.empty()) throw EmptyBatchError();
  if (img.size() != txt.size())
    throw ShapeMismatchError("batch sides differ: " + std::to_string(img.size()) + " vs " +
                             std::to_string(txt.size()));
  const std::size_t n = img.size();
  Matrix sim(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sim(i, j) = dot(img[i].values, txt[j].values);
  return info_nce_loss(sim, tau);
}

std::vector<double> per_sample_losses(const Matrix& sim, double tau) {
  check_tau(tau);
  const std::size_t n = sim.rows;
  if (n == 0) throw EmptyBatchError();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double m = -1e300;
    for (std::size_t j = 0; j < n; ++j) m = std::max(m, sim(i, j) / tau);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(sim(i, j) / tau - m);
    out[i] += 0.5 * (m + std::log(z) - sim(i, i) / tau);
  }
  for (std::size_t j = 0; j < n; ++j) {
    double m = -1e300;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, sim(i, j) / tau);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) z += std::exp(sim(i, j) / tau - m);
    out[j] += 0.5 * (m + std::log(z) - sim(j, j) / tau);
  }
  return out;
}

EncoderGradients info_nce_gradients(const EncoderParams& params, const BatchForward& fwd) {
  check_tau(params.tau);
  const std::size_t n = fwd.size();
  if (n == 0) throw EmptyBatchError();
  const std::size_t d_emb = params.embed_dim();

  const Matrix g = loss_sim_gradient(fwd.sim, params.tau);

  EncoderGradients grads;
  grads.img_w1 = Matrix(params.img.w1.rows, params.img.w1.cols);
  grads.txt_w1 = Matrix(params.txt.w1.rows, params.txt.w1.cols);
  if (params.img.depth == 2) grads.img_w2 = Matrix(params.img.w2.rows, params.img.w2.cols);
  if (params.txt.depth == 2) grads.txt_w2 = Matrix(params.txt.w2.rows, params.txt.w2.cols);

  // d(loss)/d(img_i) = sum_j g(i,j) txt_j; d(loss)/d(txt_j) = sum_i g(i,j) img_i
  std::vector<std::vector<double>> dimg(n, std::vector<double>(d_emb, 0.0));
  std::vector<std::vector<double>> dtxt(n, std::vector<double>(d_emb, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double gij = g(i, j);
      axpy(gij, fwd.txt.emb[j].values, dimg[i]);
      axpy(gij, fwd.img.emb[i].values, dtxt[j]);
    }
  }
  backward_tower(params.img, fwd.img, dimg, grads.img_w1, grads.img_w2);
  backward_tower(params.txt, fwd.txt, dtxt, grads.txt_w1, grads.txt_w2);

  // sim enters the loss only as sim/tau, so d(loss)/dtau = -(1/tau) sum g.sim
  double gs = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) gs += g(i, j) * fwd.sim(i, j);
  grads.tau = -gs / params.tau;
  return grads;
}

EncoderGradients info_nce_gradients(const EncoderParams& params, const Dataset& dataset,
                                    std::span<const std::uint32_t> rows) {
  const BatchForward fwd = forward_batch(params, dataset, rows, 1.0);
  return info_nce_gradients(params, fwd);
}

std::vector<PairDiagnostic> pair_gradient_diagnostic(const BatchForward& fwd, double tau) {
  check_tau(tau);
  const std::size_t n = fwd.size();
  if (n < 2) throw EmptyBatchError();
  const Matrix g = loss_sim_gradient(fwd.sim, tau);
  std::vector<PairDiagnostic> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].id = fwd.ids[i];
    out[i].dloss_dsim = g(i, i);
    out[i].clip_score = fwd.clip_scores[i];
  }
  return out;
}

std::vector<PairDiagnostic> pair_gradient_diagnostic(const EncoderParams& params,
                                                     const Dataset& dataset,
                                                     std::span<const std::uint32_t> rows,
                                                     double w) {
  const BatchForward fwd = forward_batch(params, dataset, rows, w);
  return pair_gradient_diagnostic(fwd, params.tau);
}

}  // namespace dissect
