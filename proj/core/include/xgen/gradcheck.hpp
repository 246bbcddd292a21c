#pragma once

#include <functional>

#include "xgen/rng.hpp"
#include "xgen/tensor.hpp"

namespace xgen {

/// Central-difference gradient check.
///
/// `x` must be a parameter (tracked leaf). Returns
///   max_i |analytic_i - (f(x + h e_i) - f(x - h e_i)) / 2h| / max(1, |analytic_i|).
/// The gradient of x is zeroed before and after the analytic pass.
double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x, double h = 1e-5);

/// Parameter of the given shape with i.i.d. N(0, stddev^2) entries.
Tensor random_parameter(const Shape& shape, Rng& rng, double stddev = 1.0);

/// Constant of i.i.d. standard normals (Box-Muller through Rng::normal).
Tensor sample_gaussian(Rng& rng, const Shape& shape);

}  // namespace xgen
