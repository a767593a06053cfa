#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "laeo/dual.hpp"
#include "laeo/util.hpp"

namespace laeo {

using DualFn = std::function<Dual(std::span<const Dual>)>;
using RealFn = std::function<double(std::span<const double>)>;

// Exact gradient by forward-mode evaluation, one tangent seed per parameter.
inline std::vector<double> grad(const DualFn& f, std::span<const double> params) {
  std::vector<Dual> x(params.begin(), params.end());
  std::vector<double> g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    x[i].d = 1.0;
    const Dual out = f(x);
    if (!std::isfinite(out.v) || !std::isfinite(out.d))
      throw NumericalError("grad: non-finite value or derivative at seed " + std::to_string(i));
    g[i] = out.d;
    x[i].d = 0.0;
  }
  return g;
}

inline constexpr double kFdStep = 1e-6;

// Max over coordinates of |analytic - central difference| / max(|analytic|, 1e-8).
// Only meaningful away from the losses' nonsmooth sets; callers sample
// configurations accordingly.
inline double fd_check(const RealFn& f, std::span<const double> params,
                       std::span<const double> analytic, double step = kFdStep) {
  if (params.size() != analytic.size())
    throw std::invalid_argument("fd_check: gradient size mismatch");
  std::vector<double> x(params.begin(), params.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + step;
    const double hi = f(x);
    x[i] = orig - step;
    const double lo = f(x);
    x[i] = orig;
    const double fd = (hi - lo) / (2.0 * step);
    const double rel = std::abs(analytic[i] - fd) / std::max(std::abs(analytic[i]), 1e-8);
    worst = std::max(worst, rel);
  }
  return worst;
}

inline double fd_check(const RealFn& f, const DualFn& fd_source, std::span<const double> params,
                       double step = kFdStep) {
  const std::vector<double> g = grad(fd_source, params);
  return fd_check(f, params, g, step);
}

}  // namespace laeo
