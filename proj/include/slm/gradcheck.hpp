#pragma once

#include <functional>
#include <span>
#include <vector>

namespace slm {

// Central differences (f(p+h) - f(p-h)) / 2h for each coordinate of `params`.
// The coordinates are perturbed in place and restored before returning, so
// `f` may read them through any alias (e.g. a model's parameter tensors).
std::vector<double> finite_diff_grad(const std::function<double()>& f, std::span<double> params, double h = 1e-5);

double finite_diff(const std::function<double(double)>& f, double x, double h = 1e-5);

// |a - b| / max(|a|, |b|, floor). The floor keeps coordinates whose true
// gradient is ~0 from reporting huge relative errors on rounding noise.
double relative_error(double a, double b, double floor = 1e-6);

}  // namespace slm
