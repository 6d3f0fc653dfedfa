#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dissect/dataset.hpp"
#include "dissect/encoder.hpp"

namespace dissect {

struct EpochRow {
  int epoch = 0;
  double loss = 0.0;
  double ir1 = 0.0, ir5 = 0.0, ir10 = 0.0;  // text query -> image gallery
  double tr1 = 0.0, tr5 = 0.0, tr10 = 0.0;  // image query -> text gallery
  double tp_acc = 0.0;
  double clean_mean = 0.0, noisy_mean = 0.0;
  double clean_var = 0.0, noisy_var = 0.0;
  double overlap = 0.0;
  std::uint64_t fwd = 0;  // cumulative per-sample forward passes
  std::uint64_t bwd = 0;  // cumulative per-sample backward passes
  double wall_ms = 0.0;
};

struct ExperimentResult {
  std::vector<EpochRow> rows;
  std::string config_echo;
  std::uint64_t seed = 0;
  std::string version;
  bool has_ground_truth = true;
};

// Fixed column order:
// epoch,loss,ir1,ir5,ir10,tr1,tr5,tr10,tp_acc,clean_mean,noisy_mean,
// clean_var,noisy_var,overlap,fwd,bwd,wall_ms
void write_metrics_csv(const ExperimentResult& result, const std::filesystem::path& path);

struct RecallTable {
  std::vector<int> ks;
  std::vector<double> img_to_txt;  // text retrieval (TR@k)
  std::vector<double> txt_to_img;  // image retrieval (IR@k)
};

// Ranks every cross-modal candidate by inner product of normalized
// embeddings; ties break by ascending id. Gallery must be noise-free.
RecallTable recall_at_k(const EncoderParams& params, const Dataset& gallery,
                        std::span<const int> ks);

// Fraction of selected ids that are truly clean.
double tp_accuracy(std::span<const std::uint64_t> selected_ids, const Dataset& dataset);

struct DistributionStats {
  double clean_mean = 0.0, noisy_mean = 0.0;
  double clean_var = 0.0, noisy_var = 0.0;
  double overlap = 0.0;  // histogram overlap coefficient in [0,1]
  std::size_t clean_count = 0, noisy_count = 0;
};

// Partition statistics of per-id scores by ground-truth cleanliness, plus the
// overlap coefficient of 64-bin histograms over [0, w].
DistributionStats distribution_stats(const std::map<std::uint64_t, double>& scores,
                                     const Dataset& dataset, double w);

struct AccelerationReport {
  bool a_reached = false, b_reached = false;
  int epoch_a = -1, epoch_b = -1;
  std::uint64_t bwd_a = 0, bwd_b = 0;
  double ratio = 0.0;  // bwd_a / bwd_b, defined only when both reached
};

// First epoch (and cumulative backward count) at which each series reaches
// target_value on the named metric; "reaches" means <= for loss, >= for
// everything else. Throws MetricMissing for unknown metric names.
AccelerationReport acceleration_report(const ExperimentResult& a, const ExperimentResult& b,
                                       const std::string& target_metric, double target_value);

}  // namespace dissect
