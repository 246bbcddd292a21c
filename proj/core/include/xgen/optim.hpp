#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xgen/tensor.hpp"

namespace xgen {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moment buffers for one parameter group. m and v start at zero, t at 0.
struct AdamState {
  AdamHyper hyper;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::int64_t t = 0;
};

/// One bias-corrected Adam update. Gradients are left untouched.
void adam_step(std::span<Tensor> params, AdamState& state);

/// Rescales gradients so their global L2 norm is at most max_norm.
/// Returns the factor applied (1.0 when already within bound).
double clip_grad_norm(std::span<Tensor> params, double max_norm);

double global_grad_norm(std::span<const Tensor> params);
void zero_grads(std::span<Tensor> params);

/// A parameter group bundled with its optimizer state.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Tensor> params, AdamHyper hyper);

  void step() { adam_step(params_, state_); }
  void zero_grad() { zero_grads(params_); }
  double clip(double max_norm) { return clip_grad_norm(params_, max_norm); }

  std::vector<Tensor>& params() { return params_; }
  const std::vector<Tensor>& params() const { return params_; }
  AdamState& state() { return state_; }
  const AdamState& state() const { return state_; }

 private:
  std::vector<Tensor> params_;
  AdamState state_;
};

}  // namespace xgen
