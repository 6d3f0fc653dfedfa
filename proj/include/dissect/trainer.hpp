#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "dissect/dataset.hpp"
#include "dissect/encoder.hpp"
#include "dissect/ledger.hpp"
#include "dissect/metrics.hpp"
#include "dissect/optimizer.hpp"
#include "dissect/strategy.hpp"

namespace dissect {

struct TrainConfig {
  int epochs = 40;
  int batch_size = 256;
  double learning_rate = 0.05;
  LrSchedule lr_schedule = LrSchedule::kCosine;
  double optimizer_momentum = 0.9;
  std::uint64_t seed = 1;
  SelectionStrategy strategy;
  double w = 100.0;  // CLIPScore scale
  ModelConfig model;
  // ClipScoreOracle doubles as a coreset filter when this is set.
  bool oracle_as_coreset = false;

  void validate() const;  // throws InvalidConfigError
};

// Canonical flat "key = value" echo of the configuration; hashed into the
// manifest and embedded in checkpoints.
std::string config_echo(const TrainConfig& cfg);

struct TrainState {
  EncoderParams params;
  OptimizerState velocity;
  ScoreLedger ledger;
  int epoch = 0;           // completed epochs
  std::uint64_t step = 0;  // optimizer updates performed
  std::uint64_t forward_count = 0;
  std::uint64_t backward_count = 0;
};

struct RunOutput {
  ExperimentResult result;
  TrainState state;
};

using EpochObserver = std::function<void(const TrainState& state, const EpochRow& row)>;

// Drives Algorithm-1-style training: per batch, a scoring forward over the
// whole batch, ledger updates, sub-batch selection, loss and analytic
// gradients on the selected sub-batch only (reusing the scoring activations),
// then a heavy-ball step with tau clamped.
class Trainer {
 public:
  Trainer(const TrainConfig& cfg, const Dataset& train, const Dataset& eval);

  // t_w epochs of full-batch training, then a full-dataset scoring pass that
  // snapshots CLIPScore_hist. Requires the warm-up strategy and an
  // uninitialized ledger.
  void warmup();

  void train_epoch();

  RunOutput run();

  const TrainState& state() const { return state_; }
  const ExperimentResult& result() const { return result_; }
  void set_observer(EpochObserver obs) { observer_ = std::move(obs); }

 private:
  void run_epoch(bool selective);
  std::vector<std::uint32_t> epoch_permutation(int epoch_number) const;

  TrainConfig cfg_;
  const Dataset& train_;
  const Dataset& eval_;
  TrainState state_;
  ExperimentResult result_;
  std::uint64_t total_steps_ = 0;
  EpochObserver observer_;
};

// Full experiment: validates the eval split (disjoint features, noise-free),
// applies any coreset filtering, trains, and returns the per-epoch series
// plus the final state.
RunOutput train_run(const TrainConfig& cfg, const Dataset& train, const Dataset& eval,
                    const EpochObserver& observer = {});
ExperimentResult run_experiment(const TrainConfig& cfg, const Dataset& train,
                                const Dataset& eval);

// Scores every sample under fixed params (batched forward passes); keyed by
// sample id.
std::map<std::uint64_t, double> score_dataset(const EncoderParams& params, const Dataset& dataset,
                                              double w, int batch_size);

}  // namespace dissect
