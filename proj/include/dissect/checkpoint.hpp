#pragma once

#include <filesystem>

#include "dissect/trainer.hpp"

namespace dissect {

// DSCK binary checkpoint: config echo, counters, weights and velocity
// buffers as float64 little-endian, the score ledger, and the RNG seed
// (streams are re-derivable from seed + counters).
struct Checkpoint {
  std::string config_echo;
  std::uint64_t seed = 0;
  int epoch = 0;
  std::uint64_t step = 0;
  std::uint64_t forward_count = 0;
  std::uint64_t backward_count = 0;
  EncoderParams params;
  OptimizerState velocity;
  ScoreLedger ledger;
};

Checkpoint make_checkpoint(const TrainConfig& cfg, const TrainState& state);

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace dissect
