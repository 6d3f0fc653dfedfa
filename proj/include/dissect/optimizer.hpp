#pragma once

#include <cstdint>

#include "dissect/encoder.hpp"
#include "dissect/info_nce.hpp"

namespace dissect {

enum class LrSchedule { kConstant, kCosine };

// Heavy-ball velocity buffers, shaped like the parameters they drive.
struct OptimizerState {
  Matrix img_w1, img_w2, txt_w1, txt_w2;
  double tau = 0.0;
};

OptimizerState make_optimizer_state(const EncoderParams& params);

// v <- momentum*v - lr*g; p <- p + v. Clamps tau to its legal range after
// the update. Throws ShapeMismatchError when buffers disagree.
void optimizer_step(EncoderParams& params, OptimizerState& velocity,
                    const EncoderGradients& grads, double lr, double momentum);

// Cosine decays from base_lr to 0 across total_steps; non-increasing in step.
double lr_at(LrSchedule schedule, double base_lr, std::uint64_t step, std::uint64_t total_steps);

}  // namespace dissect
