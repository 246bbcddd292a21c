#include "xgen/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "xgen/error.hpp"

namespace xgen {

double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x, double h) {
  if (!x.requires_grad()) throw ContractError("grad_check: x must be a tracked parameter");
  if (h < 1e-6 || h > 1e-4) throw ContractError("grad_check: step size must lie in [1e-6, 1e-4]");
  Tape::active().clear();
  x.zero_grad();
  Tensor loss = f(x);
  backward(loss);
  std::vector<double> analytic(x.grad().begin(), x.grad().end());
  x.zero_grad();

  auto values = x.mutable_data();
  double worst = 0.0;
  NoGradGuard no_grad;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double orig = values[i];
    values[i] = orig + h;
    const double fp = f(x).item();
    values[i] = orig - h;
    const double fm = f(x).item();
    values[i] = orig;
    const double numeric = (fp - fm) / (2.0 * h);
    const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

Tensor random_parameter(const Shape& shape, Rng& rng, double stddev) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = stddev * rng.normal();
  return Tensor::parameter(shape, std::move(v));
}

Tensor sample_gaussian(Rng& rng, const Shape& shape) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.normal();
  return Tensor::constant(shape, std::move(v));
}

}  // namespace xgen
