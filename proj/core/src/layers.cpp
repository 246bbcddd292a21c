#include "xgen/layers.hpp"

#include <cmath>

#include "xgen/error.hpp"

namespace xgen {

std::vector<Tensor> tensors_of(const NamedParams& named) {
  std::vector<Tensor> out;
  out.reserve(named.size());
  for (const auto& [_, t] : named) out.push_back(t);
  return out;
}

void append(NamedParams& dst, const std::string& prefix, const NamedParams& src) {
  for (const auto& [name, t] : src) dst.emplace_back(prefix + "." + name, t);
}

Tensor uniform_parameter(const Shape& shape, double bound, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = (2.0 * rng.uniform() - 1.0) * bound;
  return Tensor::parameter(shape, std::move(v));
}

Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> targets) {
  return scale(mean(pick(log_softmax(logits), targets)), -1.0);
}

std::vector<std::size_t> argmax_rows(const Tensor& t) {
  const std::size_t c = t.cols(), n = t.rows();
  std::vector<std::size_t> out(n);
  auto d = t.data();
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < c; ++j)
      if (d[r * c + j] > d[r * c + best]) best = j;
    out[r] = best;
  }
  return out;
}

Linear Linear::init(std::size_t in, std::size_t out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  return {uniform_parameter({in, out}, bound, rng), uniform_parameter({out}, bound, rng)};
}

Tensor Linear::operator()(const Tensor& x) const { return add(matmul(x, weight), bias); }

Mlp Mlp::init(const std::vector<std::size_t>& widths, Rng& rng) {
  if (widths.size() < 2) throw ContractError("Mlp::init: need at least input and output widths");
  Mlp m;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) m.layers.push_back(Linear::init(widths[i], widths[i + 1], rng));
  return m;
}

Tensor Mlp::operator()(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i](h);
    if (i + 1 < layers.size()) h = relu(h);
  }
  return h;
}

NamedParams Mlp::params() const {
  NamedParams out;
  for (std::size_t i = 0; i < layers.size(); ++i) append(out, "layer" + std::to_string(i), layers[i].params());
  return out;
}

GruCell GruCell::init(std::size_t in, std::size_t hidden, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  return {uniform_parameter({in, 3 * hidden}, bound, rng), uniform_parameter({hidden, 3 * hidden}, bound, rng),
          uniform_parameter({3 * hidden}, bound, rng), uniform_parameter({3 * hidden}, bound, rng)};
}

Tensor GruCell::input_projection(const Tensor& x) const { return add(matmul(x, w_x), b_x); }

Tensor GruCell::step(const Tensor& gx, const Tensor& h) const {
  const std::size_t H = hidden();
  Tensor gh = add(matmul(h, w_h), b_h);
  Tensor r = sigmoid(add(slice(gx, 0, H), slice(gh, 0, H)));
  Tensor z = sigmoid(add(slice(gx, H, 2 * H), slice(gh, H, 2 * H)));
  Tensor n = tanh(add(slice(gx, 2 * H, 3 * H), mul(r, slice(gh, 2 * H, 3 * H))));
  return add(n, mul(z, sub(h, n)));
}

}  // namespace xgen
