#include "xgen/optim.hpp"

#include <cmath>

#include "xgen/error.hpp"

namespace xgen {

void adam_step(std::span<Tensor> params, AdamState& state) {
  for (const auto& p : params)
    if (!p.has_grad()) throw ContractError("adam_step: parameter of shape " + shape_str(p.shape()) + " has no gradient");
  if (state.m.size() != params.size()) {
    state.m.clear();
    state.v.clear();
    for (const auto& p : params) {
      state.m.emplace_back(p.numel(), 0.0);
      state.v.emplace_back(p.numel(), 0.0);
    }
    state.t = 0;
  }
  ++state.t;
  const auto& h = state.hyper;
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto w = params[k].mutable_data();
    auto g = params[k].grad();
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (m.size() != w.size()) throw ContractError("adam_step: state does not match parameter sizes");
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
      v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= h.lr * mhat / (std::sqrt(vhat) + h.eps);
    }
  }
}

double global_grad_norm(std::span<const Tensor> params) {
  double ss = 0.0;
  for (const auto& p : params)
    if (p.has_grad())
      for (double g : p.grad()) ss += g * g;
  return std::sqrt(ss);
}

double clip_grad_norm(std::span<Tensor> params, double max_norm) {
  if (!(max_norm > 0)) throw ContractError("clip_grad_norm: max_norm must be positive");
  const double norm = global_grad_norm(params);
  if (norm <= max_norm) return 1.0;
  const double s = max_norm / norm;
  for (auto& p : params)
    if (p.has_grad())
      for (auto& g : p.mutable_grad()) g *= s;
  return s;
}

void zero_grads(std::span<Tensor> params) {
  for (auto& p : params) p.zero_grad();
}

Adam::Adam(std::vector<Tensor> params, AdamHyper hyper) : params_(std::move(params)) {
  state_.hyper = hyper;
  for (const auto& p : params_) {
    state_.m.emplace_back(p.numel(), 0.0);
    state_.v.emplace_back(p.numel(), 0.0);
  }
}

}  // namespace xgen
