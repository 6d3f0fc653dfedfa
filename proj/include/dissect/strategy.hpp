#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dissect/dataset.hpp"
#include "dissect/ledger.hpp"

namespace dissect {

enum class StrategyKind {
  kRandomOnline,
  kRandomCoreset,
  kBigLoss,
  kSmallLoss,
  kClipScoreOnline,
  kClipScoreOracle,
  kDissectWarmup,
  kDissectMomentum,
};

const char* strategy_kind_name(StrategyKind kind);
std::optional<StrategyKind> parse_strategy_kind(const std::string& name);

struct SelectionStrategy {
  StrategyKind kind = StrategyKind::kRandomOnline;
  double r = 0.5;          // selection ratio budget in (0,1]
  double beta = 0.9;       // momentum variant only
  int warmup_epochs = 2;   // warm-up variant only

  void validate() const;  // throws InvalidConfigError
  bool is_coreset() const { return kind == StrategyKind::kRandomCoreset; }
  bool is_dissect() const {
    return kind == StrategyKind::kDissectWarmup || kind == StrategyKind::kDissectMomentum;
  }
};

// Per-batch context. Arrays are aligned with the id list handed to select();
// fields not needed by the strategy in use may be left empty. Ground-truth
// flags are only ever populated for the oracle baseline.
struct SelectionContext {
  std::span<const double> losses;
  std::span<const double> clip_scores;
  const ScoreLedger* ledger = nullptr;
  std::mt19937_64* rng = nullptr;
  std::span<const std::uint8_t> is_noisy;
  int epoch = 0;
};

// Returns exactly max(1, round(r*|batch|)) ids. Ranked strategies return
// rank order; ties break by ascending id. RandomOnline preserves batch order.
// Throws MissingContext naming the absent field.
std::vector<std::uint64_t> select(const SelectionStrategy& strategy,
                                  std::span<const std::uint64_t> batch_ids,
                                  const SelectionContext& context);

// One-shot pre-training filter: keeps round(r*|D|) samples. RandomCoreset
// draws uniformly; ClipScoreOracle ranks by cleanliness, then score, then id.
Dataset coreset_filter(const SelectionStrategy& strategy, const Dataset& dataset,
                       std::span<const double> scores, std::mt19937_64& rng);

}  // namespace dissect
