#include "dissect/optimizer.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "dissect/errors.hpp"

namespace dissect {

OptimizerState make_optimizer_state(const EncoderParams& params) {
  OptimizerState s;
  s.img_w1 = Matrix(params.img.w1.rows, params.img.w1.cols);
  s.txt_w1 = Matrix(params.txt.w1.rows, params.txt.w1.cols);
  if (params.img.depth == 2) s.img_w2 = Matrix(params.img.w2.rows, params.img.w2.cols);
  if (params.txt.depth == 2) s.txt_w2 = Matrix(params.txt.w2.rows, params.txt.w2.cols);
  return s;
}

namespace {

void step_matrix(Matrix& p, Matrix& v, const Matrix& g, double lr, double momentum) {
  if (p.rows != g.rows || p.cols != g.cols || p.rows != v.rows || p.cols != v.cols)
    throw ShapeMismatchError("optimizer buffers disagree: " + std::to_string(p.rows) + "x" +
                             std::to_string(p.cols) + " vs " + std::to_string(g.rows) + "x" +
                             std::to_string(g.cols));
  for (std::size_t i = 0; i < p.a.size(); ++i) {
    v.a[i] = momentum * v.a[i] - lr * g.a[i];
    p.a[i] += v.a[i];
  }
}

}  // namespace

void optimizer_step(EncoderParams& params, OptimizerState& velocity,
                    const EncoderGradients& grads, double lr, double momentum) {
  step_matrix(params.img.w1, velocity.img_w1, grads.img_w1, lr, momentum);
  step_matrix(params.txt.w1, velocity.txt_w1, grads.txt_w1, lr, momentum);
  if (params.img.depth == 2) step_matrix(params.img.w2, velocity.img_w2, grads.img_w2, lr, momentum);
  if (params.txt.depth == 2) step_matrix(params.txt.w2, velocity.txt_w2, grads.txt_w2, lr, momentum);
  velocity.tau = momentum * velocity.tau - lr * grads.tau;
  params.tau += velocity.tau;
  params.clamp_tau();
}

double lr_at(LrSchedule schedule, double base_lr, std::uint64_t step, std::uint64_t total_steps) {
  if (schedule == LrSchedule::kConstant || total_steps == 0) return base_lr;
  const double t = std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps));
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

}  // namespace dissect
