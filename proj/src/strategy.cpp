#include "dissect/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dissect/errors.hpp"

namespace dissect {

const char* strategy_kind_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kRandomOnline: return "random-online";
    case StrategyKind::kRandomCoreset: return "random-coreset";
    case StrategyKind::kBigLoss: return "big-loss";
    case StrategyKind::kSmallLoss: return "small-loss";
    case StrategyKind::kClipScoreOnline: return "clipscore-online";
    case StrategyKind::kClipScoreOracle: return "clipscore-oracle";
    case StrategyKind::kDissectWarmup: return "dissect-warmup";
    case StrategyKind::kDissectMomentum: return "dissect-momentum";
  }
  return "unknown";
}

std::optional<StrategyKind> parse_strategy_kind(const std::string& name) {
  static const std::pair<const char*, StrategyKind> table[] = {
      {"random-online", StrategyKind::kRandomOnline},
      {"random-coreset", StrategyKind::kRandomCoreset},
      {"big-loss", StrategyKind::kBigLoss},
      {"small-loss", StrategyKind::kSmallLoss},
      {"clipscore-online", StrategyKind::kClipScoreOnline},
      {"clipscore-oracle", StrategyKind::kClipScoreOracle},
      {"dissect-warmup", StrategyKind::kDissectWarmup},
      {"dissect-momentum", StrategyKind::kDissectMomentum},
  };
  for (const auto& [n, k] : table)
    if (name == n) return k;
  return std::nullopt;
}

void SelectionStrategy::validate() const {
  if (!(r > 0.0 && r <= 1.0)) throw InvalidConfigError("selection ratio r must lie in (0,1]");
  if (kind == StrategyKind::kDissectMomentum && !(beta > 0.0 && beta < 1.0))
    throw InvalidConfigError("beta must lie in (0,1)");
  if (kind == StrategyKind::kDissectWarmup && warmup_epochs < 1)
    throw InvalidConfigError("warm-up epochs must be >= 1");
}

namespace {

std::size_t budget(double r, std::size_t n) {
  const auto k = static_cast<std::size_t>(std::llround(r * static_cast<double>(n)));
  return std::max<std::size_t>(1, std::min(k, n));
}

// Indices sorted by key (descending when `descending`), id ascending on ties.
std::vector<std::size_t> ranked_indices(std::span<const std::uint64_t> ids,
                                        std::span<const double> key, bool descending) {
  std::vector<std::size_t> idx(ids.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (key[a] != key[b]) return descending ? key[a] > key[b] : key[a] < key[b];
    return ids[a] < ids[b];
  });
  return idx;
}

std::vector<std::uint64_t> take(std::span<const std::uint64_t> ids,
                                const std::vector<std::size_t>& order, std::size_t k) {
  std::vector<std::uint64_t> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(ids[order[i]]);
  return out;
}

std::vector<std::uint64_t> select_random(std::span<const std::uint64_t> ids, std::size_t k,
                                         std::mt19937_64* rng) {
  if (k == ids.size()) return {ids.begin(), ids.end()};  // full budget: batch order, no draw
  if (rng == nullptr) throw MissingContextError("rng");
  std::vector<std::size_t> idx(ids.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::size_t> picked;
  picked.reserve(k);
  std::sample(idx.begin(), idx.end(), std::back_inserter(picked), k, *rng);
  std::vector<std::uint64_t> out;
  out.reserve(k);
  for (auto i : picked) out.push_back(ids[i]);  // std::sample keeps batch order
  return out;
}

}  // namespace

std::vector<std::uint64_t> select(const SelectionStrategy& strategy,
                                  std::span<const std::uint64_t> batch_ids,
                                  const SelectionContext& context) {
  if (batch_ids.empty()) throw EmptyBatchError();
  strategy.validate();
  const std::size_t n = batch_ids.size();
  const std::size_t k = budget(strategy.r, n);

  auto need_aligned = [&](std::span<const double> v, const char* name) {
    if (v.size() != n) throw MissingContextError(name);
  };

  switch (strategy.kind) {
    case StrategyKind::kRandomOnline:
      return select_random(batch_ids, k, context.rng);

    case StrategyKind::kBigLoss:
      need_aligned(context.losses, "losses");
      return take(batch_ids, ranked_indices(batch_ids, context.losses, true), k);

    case StrategyKind::kSmallLoss:
      need_aligned(context.losses, "losses");
      return take(batch_ids, ranked_indices(batch_ids, context.losses, false), k);

    case StrategyKind::kClipScoreOnline:
      need_aligned(context.clip_scores, "clip_scores");
      return take(batch_ids, ranked_indices(batch_ids, context.clip_scores, true), k);

    case StrategyKind::kClipScoreOracle: {
      if (context.is_noisy.size() != n) throw MissingContextError("is_noisy");
      need_aligned(context.clip_scores, "clip_scores");
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), 0);
      std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (context.is_noisy[a] != context.is_noisy[b])
          return context.is_noisy[a] < context.is_noisy[b];  // clean first
        if (context.clip_scores[a] != context.clip_scores[b])
          return context.clip_scores[a] > context.clip_scores[b];
        return batch_ids[a] < batch_ids[b];
      });
      return take(batch_ids, idx, k);
    }

    case StrategyKind::kDissectWarmup:
    case StrategyKind::kDissectMomentum: {
      if (context.ledger == nullptr) throw MissingContextError("ledger");
      if (strategy.kind == StrategyKind::kDissectWarmup && !context.ledger->initialized()) {
        // Warm-up phase: no history yet, train like random online.
        return select_random(batch_ids, k, context.rng);
      }
      const auto deltas = context.ledger->compute_delta(batch_ids);
      return take(batch_ids, ranked_indices(batch_ids, deltas, true), k);
    }

    case StrategyKind::kRandomCoreset:
      throw InvalidStrategyError("random-coreset is a pre-training filter, not an online rule");
  }
  throw InvalidStrategyError("unknown strategy kind");
}

Dataset coreset_filter(const SelectionStrategy& strategy, const Dataset& dataset,
                       std::span<const double> scores, std::mt19937_64& rng) {
  strategy.validate();
  const std::size_t n = dataset.size();
  const auto k = static_cast<std::size_t>(std::llround(strategy.r * static_cast<double>(n)));

  std::vector<std::size_t> keep;
  if (strategy.kind == StrategyKind::kRandomCoreset) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    keep.reserve(k);
    std::sample(idx.begin(), idx.end(), std::back_inserter(keep), k, rng);
  } else if (strategy.kind == StrategyKind::kClipScoreOracle) {
    if (!dataset.ground_truth_available) throw GroundTruthUnavailableError();
    if (scores.size() != n) throw MissingContextError("scores");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      const auto& sa = dataset.samples[a];
      const auto& sb = dataset.samples[b];
      if (sa.is_noisy != sb.is_noisy) return !sa.is_noisy;
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return sa.id < sb.id;
    });
    keep.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(keep.begin(), keep.end());  // keep dataset order in the output
  } else {
    throw InvalidStrategyError("coreset_filter supports random-coreset and clipscore-oracle");
  }

  Dataset out;
  out.d_img_in = dataset.d_img_in;
  out.d_txt_in = dataset.d_txt_in;
  out.seed = dataset.seed;
  out.ground_truth_available = dataset.ground_truth_available;
  out.samples.reserve(keep.size());
  for (auto i : keep) out.samples.push_back(dataset.samples[i]);
  out.noise_rate =
      out.samples.empty() ? 0.0
                          : static_cast<double>(out.noisy_count()) / static_cast<double>(out.size());
  return out;
}

}  // namespace dissect
