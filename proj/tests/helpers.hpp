#pragma once

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "dissect/dataset.hpp"
#include "dissect/encoder.hpp"
#include "dissect/info_nce.hpp"

namespace testutil {

// Random features, no concept structure; good enough for math-level tests.
inline dissect::Dataset random_dataset(std::size_t n, std::uint32_t d_img, std::uint32_t d_txt,
                                       std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  dissect::Dataset ds;
  ds.d_img_in = d_img;
  ds.d_txt_in = d_txt;
  ds.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& s = ds.samples[i];
    s.id = i;
    s.original_partner_id = i;
    s.img_feat.resize(d_img);
    s.txt_feat.resize(d_txt);
    for (auto& v : s.img_feat) v = static_cast<float>(g(rng));
    for (auto& v : s.txt_feat) v = static_cast<float>(g(rng));
  }
  return ds;
}

inline std::vector<std::uint32_t> all_rows(std::size_t n) {
  std::vector<std::uint32_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<std::uint32_t>(i);
  return rows;
}

inline double loss_of(const dissect::EncoderParams& p, const dissect::Dataset& ds,
                      std::span<const std::uint32_t> rows) {
  const auto fwd = dissect::forward_batch(p, ds, rows, 100.0);
  return dissect::info_nce_loss(fwd.sim, p.tau);
}

// All trainable coordinates, in the same order the gradients are flattened.
inline std::vector<double*> param_coords(dissect::EncoderParams& p) {
  std::vector<double*> out;
  for (auto* m : {&p.img.w1, &p.img.w2, &p.txt.w1, &p.txt.w2})
    for (auto& v : m->a) out.push_back(&v);
  out.push_back(&p.tau);
  return out;
}

inline std::vector<double> flatten_gradients(const dissect::EncoderGradients& g) {
  std::vector<double> out;
  for (const auto* m : {&g.img_w1, &g.img_w2, &g.txt_w1, &g.txt_w2})
    out.insert(out.end(), m->a.begin(), m->a.end());
  out.push_back(g.tau);
  return out;
}

// Central finite differences of the batch loss over every coordinate.
inline std::vector<double> fd_gradients(const dissect::EncoderParams& params,
                                        const dissect::Dataset& ds,
                                        std::span<const std::uint32_t> rows, double h) {
  dissect::EncoderParams p = params;
  auto coords = param_coords(p);
  std::vector<double> out(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const double orig = *coords[i];
    *coords[i] = orig + h;
    const double lp = loss_of(p, ds, rows);
    *coords[i] = orig - h;
    const double lm = loss_of(p, ds, rows);
    *coords[i] = orig;
    out[i] = (lp - lm) / (2.0 * h);
  }
  return out;
}

inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double max_diff = 0.0, max_mag = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    max_diff = std::max(max_diff, std::abs(a[i] - b[i]));
    max_mag = std::max({max_mag, std::abs(a[i]), std::abs(b[i])});
  }
  return max_diff / std::max(max_mag, 1e-10);
}

// Rejects parameter draws whose ReLU pre-activations sit within margin of the
// kink (finite differences would straddle it) or whose raw outputs are close
// to the normalization singularity.
inline bool fd_safe(const dissect::EncoderParams& p, const dissect::Dataset& ds,
                    std::span<const std::uint32_t> rows, double margin) {
  const auto fwd = dissect::forward_batch(p, ds, rows, 100.0);
  for (const auto* tower : {&fwd.img, &fwd.txt}) {
    for (const auto& pre : tower->pre)
      for (double z : pre)
        if (std::abs(z) < margin) return false;
    for (double n : tower->raw_norm)
      if (n < 1e-3) return false;
  }
  return true;
}

// Spearman rank correlation with average ranks on ties.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  auto ranks = [n](std::span<const double> v) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace testutil
