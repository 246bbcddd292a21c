#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xgen/rng.hpp"
#include "xgen/tensor.hpp"

namespace xgen {

using NamedParams = std::vector<std::pair<std::string, Tensor>>;

std::vector<Tensor> tensors_of(const NamedParams& named);
void append(NamedParams& dst, const std::string& prefix, const NamedParams& src);

/// Uniform(-bound, bound) parameter.
Tensor uniform_parameter(const Shape& shape, double bound, Rng& rng);

/// Mean negative log-likelihood of `targets` under row-wise softmax(logits).
Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> targets);

/// Per-row argmax of a [n, c] tensor; first index wins ties.
std::vector<std::size_t> argmax_rows(const Tensor& t);

/// y = x W + b.
struct Linear {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]

  static Linear init(std::size_t in, std::size_t out, Rng& rng);
  Tensor operator()(const Tensor& x) const;
  NamedParams params() const { return {{"weight", weight}, {"bias", bias}}; }
  std::size_t in_features() const { return weight.shape()[0]; }
  std::size_t out_features() const { return weight.shape()[1]; }
};

/// Stack of Linear layers with ReLU between them and none after the last.
struct Mlp {
  std::vector<Linear> layers;

  /// widths = {in, hidden..., out}.
  static Mlp init(const std::vector<std::size_t>& widths, Rng& rng);
  Tensor operator()(const Tensor& x) const;
  NamedParams params() const;
};

/// Gated recurrent unit.
///
///   r = sigmoid(gx_r + gh_r)
///   z = sigmoid(gx_z + gh_z)
///   n = tanh(gx_n + r * gh_n)
///   h' = n + z * (h - n)
///
/// with gx = x W_x + b_x and gh = h W_h + b_h, gates stacked [r | z | n].
struct GruCell {
  Tensor w_x;  // [in, 3H]
  Tensor w_h;  // [H, 3H]
  Tensor b_x;  // [3H]
  Tensor b_h;  // [3H]

  static GruCell init(std::size_t in, std::size_t hidden, Rng& rng);
  std::size_t hidden() const { return w_h.shape()[0]; }
  Tensor input_projection(const Tensor& x) const;
  /// One step from a precomputed input projection gx = x W_x + b_x.
  Tensor step(const Tensor& gx, const Tensor& h) const;
  NamedParams params() const { return {{"w_x", w_x}, {"w_h", w_h}, {"b_x", b_x}, {"b_h", b_h}}; }
};

}  // namespace xgen
