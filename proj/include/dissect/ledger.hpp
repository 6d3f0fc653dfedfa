#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace dissect {

struct Dataset;

// Per-sample CLIPScore bookkeeping: a historical score (warm-up snapshot or
// temporal-ensembling estimate), the latest observed score, and the epoch of
// observation. delta(id) = hist(id) - curr(id).
class ScoreLedger {
 public:
  struct Entry {
    double hist = 0.0;
    double curr = 0.0;
    int last_seen_epoch = -1;
    bool has_hist = false;
    bool has_curr = false;
  };

  // One-shot historical snapshot after warm-up; throws AlreadyInitialized on
  // a second call.
  void snapshot_hist(const std::map<std::uint64_t, double>& scores);

  // Eq.-style exponential moving average: hist <- beta*hist + (1-beta)*curr,
  // initializing hist with curr on first observation. Throws InvalidBeta.
  void update_hist_momentum(std::uint64_t id, double curr, double beta);

  void set_curr(std::uint64_t id, double score, int epoch);

  // Throws MissingScore(id) unless both hist and curr are present.
  double delta(std::uint64_t id) const;
  std::vector<double> compute_delta(std::span<const std::uint64_t> ids) const;

  bool initialized() const { return initialized_; }
  bool has_hist(std::uint64_t id) const;
  bool has_curr(std::uint64_t id) const;
  double hist(std::uint64_t id) const;
  double curr(std::uint64_t id) const;
  std::optional<Entry> entry(std::uint64_t id) const;

  const std::map<std::uint64_t, Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  // CSV columns: id, hist_score, curr_score, delta, is_noisy, epoch.
  // Ordered by id; cells left empty where a value is unknown. dataset may be
  // null (no ground-truth column values).
  void export_csv(const std::filesystem::path& path, const Dataset* dataset) const;

 private:
  std::map<std::uint64_t, Entry> entries_;
  bool initialized_ = false;
};

}  // namespace dissect
