#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "iph/linalg.hpp"

namespace iph {

struct NelderMeadOptions {
  double initial_step = 0.1;
  int max_evaluations = 500;
  /// Stop when best and worst simplex values differ by less than this.
  double f_tolerance = 1e-10;
  /// ... and the simplex diameter is below this.
  double x_tolerance = 1e-8;
  /// Dimension-dependent coefficients (Gao and Han); plain NM otherwise.
  bool adaptive = true;
};

struct NelderMeadResult {
  Vector x;
  double value = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  bool converged = false;
  /// Best value after each iteration; non-increasing.
  std::vector<double> best_trace;
};

/// Derivative-free minimisation of f: R^n -> R. Non-finite values are
/// treated as +infinity, so infeasible regions are simply rejected. The
/// returned point is never worse than x0.
template <class Objective>
NelderMeadResult nelder_mead(Objective&& f, const Vector& x0, const NelderMeadOptions& opt = {}) {
  const auto n = x0.size();
  NelderMeadResult result;
  auto eval = [&](const Vector& x) {
    ++result.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  if (n == 0) {
    result.x = x0;
    result.value = eval(x0);
    result.converged = true;
    return result;
  }

  const double dn = static_cast<double>(n);
  const double alpha = 1.0;
  const double expand = opt.adaptive ? 1.0 + 2.0 / dn : 2.0;
  const double contract = opt.adaptive ? 0.75 - 0.5 / dn : 0.5;
  const double shrink = opt.adaptive ? 1.0 - 1.0 / dn : 0.5;

  std::vector<Vector> simplex(n + 1, x0);
  std::vector<double> values(n + 1);
  values[0] = eval(x0);
  for (Eigen::Index i = 0; i < n; ++i) {
    simplex[i + 1](i) += opt.initial_step;
    values[i + 1] = eval(simplex[i + 1]);
  }

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<Vector> s2;
    std::vector<double> v2;
    s2.reserve(n + 1);
    v2.reserve(n + 1);
    for (auto k : order) {
      s2.push_back(std::move(simplex[k]));
      v2.push_back(values[k]);
    }
    simplex = std::move(s2);
    values = std::move(v2);
  };

  sort_simplex();
  result.best_trace.push_back(values[0]);
  while (result.evaluations < opt.max_evaluations) {
    double diameter = 0.0;
    for (Eigen::Index i = 1; i <= n; ++i)
      diameter = std::max(diameter, (simplex[i] - simplex[0]).cwiseAbs().maxCoeff());
    if (std::isfinite(values[n]) && values[n] - values[0] <= opt.f_tolerance &&
        diameter <= opt.x_tolerance) {
      result.converged = true;
      break;
    }
    if (std::isfinite(values[0]) && std::abs(values[n] - values[0]) <= 1e-15 * std::abs(values[0]) &&
        diameter <= opt.x_tolerance) {
      result.converged = true;
      break;
    }

    Vector centroid = Vector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) centroid += simplex[i];
    centroid /= dn;

    const Vector xr = centroid + alpha * (centroid - simplex[n]);
    const double fr = eval(xr);
    if (fr < values[0]) {
      const Vector xe = centroid + expand * (xr - centroid);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[n] = xe;
        values[n] = fe;
      } else {
        simplex[n] = xr;
        values[n] = fr;
      }
    } else if (fr < values[n - 1]) {
      simplex[n] = xr;
      values[n] = fr;
    } else {
      const bool outside = fr < values[n];
      const Vector xc = outside ? Vector(centroid + contract * (xr - centroid))
                                : Vector(centroid + contract * (simplex[n] - centroid));
      const double fc = eval(xc);
      if (fc < (outside ? fr : values[n])) {
        simplex[n] = xc;
        values[n] = fc;
      } else {
        for (Eigen::Index i = 1; i <= n; ++i) {
          simplex[i] = simplex[0] + shrink * (simplex[i] - simplex[0]);
          values[i] = eval(simplex[i]);
        }
      }
    }
    sort_simplex();
    result.best_trace.push_back(values[0]);
  }
  result.x = simplex[0];
  result.value = values[0];
  return result;
}

/// Nelder-Mead restarted from its own optimum until a restart no longer
/// improves the value by more than `restart_tolerance` (relative).
template <class Objective>
NelderMeadResult nelder_mead_restarts(Objective&& f, const Vector& x0, const NelderMeadOptions& opt,
                                      int max_restarts, double restart_tolerance = 1e-12) {
  NelderMeadResult best = nelder_mead(f, x0, opt);
  for (int r = 0; r < max_restarts; ++r) {
    NelderMeadResult next = nelder_mead(f, best.x, opt);
    const double gain = best.value - next.value;
    next.evaluations += best.evaluations;
    auto trace = std::move(best.best_trace);
    trace.insert(trace.end(), next.best_trace.begin(), next.best_trace.end());
    const bool improved = next.value < best.value;
    if (improved) {
      next.best_trace = std::move(trace);
      best = std::move(next);
    } else {
      best.best_trace = std::move(trace);
      best.evaluations = next.evaluations;
    }
    if (!(gain > restart_tolerance * std::max(1e-300, std::abs(best.value)))) break;
  }
  return best;
}

}  // namespace iph
