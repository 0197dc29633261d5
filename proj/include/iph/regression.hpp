#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "iph/em.hpp"
#include "iph/errors.hpp"
#include "iph/linalg.hpp"
#include "iph/optimize.hpp"
#include "iph/phase_type.hpp"

namespace iph {

struct RegObservation {
  double y = 0.0;
  int delta = 1;
  double weight = 1.0;
  Vector x;
};

/// Centering and scaling applied to the covariates during fitting.
struct Standardization {
  Vector center;
  Vector scale;
  bool empty() const { return center.size() == 0; }
};

/// Proportional-intensities model: given covariates x,
///   Y | x ~ IPH(pi, m(x beta) T, lambda(.; theta(x))),
/// with m = exp and theta(x) = exp(gamma_0 + x_{1..} gamma_{1..}).
/// gamma is empty for the identity family, holds only gamma_0 when the
/// intensity parameter does not depend on x, and has 1 + d entries otherwise.
struct PIModel {
  PHRepresentation rep;
  Family family = Family::identity;
  Vector beta;
  Vector gamma;
  std::string link = "exp";
  Standardization standardization;

  Eigen::Index dimension() const { return beta.size(); }

  void validate() const {
    if (link != "exp") throw InputError("PIModel: only the exp link is supported");
    const auto d = beta.size();
    if (family == Family::identity) {
      if (gamma.size() != 0) throw InputError("PIModel: identity family takes no gamma");
    } else if (gamma.size() != 1 && gamma.size() != 1 + d) {
      throw InputError("PIModel: gamma must have 1 or 1 + d entries");
    }
    if (!beta.allFinite() || !gamma.allFinite()) throw InputError("PIModel: non-finite coefficient");
  }

  double score(const Vector& x) const { return beta.size() ? x.dot(beta) : 0.0; }

  /// Family parameter theta(x); 1 for the identity family.
  double theta(const Vector& x) const {
    if (family == Family::identity) return 1.0;
    double s = gamma(0);
    if (gamma.size() > 1) s += x.dot(gamma.tail(gamma.size() - 1));
    return std::exp(s);
  }

  /// The IPH law of Y given x.
  IPHModel conditional(const Vector& x) const {
    check_row(x);
    const double m = std::exp(score(x));
    const double th = theta(x);
    if (!std::isfinite(m) || !(m > 0.0) || !std::isfinite(th) || !(th > 0.0))
      throw NumericalError("PIModel: link overflow for this covariate row");
    return {rep.scaled(m), Inhomogeneity::of(family, th)};
  }

  void check_row(const Vector& x) const {
    if (x.size() != beta.size())
      throw InputError("PIModel: covariate row has " + std::to_string(x.size()) + " entries, expected " +
                       std::to_string(beta.size()));
  }
};

inline void validate_observations(std::span<const RegObservation> data) {
  if (data.empty()) throw InputError("no observations");
  const auto d = data[0].x.size();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& o = data[i];
    const std::string at = "observation " + std::to_string(i) + ": ";
    if (!(o.y >= 0.0) || !std::isfinite(o.y)) throw InputError(at + "time must be finite and >= 0");
    if (!(o.weight >= 0.0) || !std::isfinite(o.weight)) throw InputError(at + "weight must be finite and >= 0");
    if (o.delta != 0 && o.delta != 1) throw InputError(at + "status must be 0 or 1");
    if (o.x.size() != d) throw InputError(at + "inconsistent number of covariates");
    if (!o.x.allFinite()) throw InputError(at + "non-finite covariate");
  }
}

namespace detail {

struct Transformed {
  double z;
  double log_intensity;  // log of m(x beta) lambda(y; theta(x))
  bool ok;
};

inline Transformed transform_row(const PIModel& model, double y, const Vector& x) {
  const double score = model.score(x);
  const double m = std::exp(score);
  const double th = model.theta(x);
  if (!std::isfinite(m) || !(m > 0.0) || !std::isfinite(th) || !(th > 0.0)) return {0.0, 0.0, false};
  const Inhomogeneity inhom = Inhomogeneity::of(model.family, th);
  const double z = m * inhom.integrated(y);
  if (std::isnan(z)) return {0.0, 0.0, false};
  return {z, score + std::log(inhom.intensity(y)), true};
}

}  // namespace detail

/// z = m(x beta) G(y; theta(x gamma)), the data on the PH scale.
inline double transform(double y, const Vector& x, const PIModel& model, std::size_t index = 0) {
  if (!(y >= 0.0)) throw InputError("transform: y must be non-negative");
  model.check_row(x);
  const auto t = detail::transform_row(model, y, x);
  if (!t.ok) throw OverflowError("transform: exp link overflow", index);
  return t.z;
}

/// Inverse of transform in y.
inline double back_transform(double z, const Vector& x, const PIModel& model) {
  model.check_row(x);
  const double m = std::exp(model.score(x));
  return Inhomogeneity::of(model.family, model.theta(x)).inverse(z / m);
}

namespace detail {

// Log-likelihood with the baseline kernel prepared by the caller. Returns
// -inf instead of throwing when the link overflows, unless `strict`.
inline double pi_loglik(const PIModel& model, std::span<const RegObservation> data,
                        const PhaseTypeKernel& kernel, bool strict) {
  const double ninf = -std::numeric_limits<double>::infinity();
  double ll = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& o = data[i];
    if (o.weight == 0.0) continue;
    const auto t = transform_row(model, o.y, o.x);
    if (!t.ok || !std::isfinite(t.z)) {
      if (strict && !t.ok) throw OverflowError("pi_loglik: exp link overflow", i);
      return ninf;
    }
    const PHValues lv = kernel.log_values(t.z);
    const double term = o.delta == 1 ? t.log_intensity + lv.density : lv.survival;
    if (std::isnan(term)) return ninf;
    ll += o.weight * term;
  }
  return std::isnan(ll) ? ninf : ll;
}

}  // namespace detail

/// sum_i w_i [delta_i log f(y_i | x_i) + (1 - delta_i) log S(y_i | x_i)].
inline double pi_loglik(const PIModel& model, std::span<const RegObservation> data) {
  model.validate();
  validate_observations(data);
  if (data[0].x.size() != model.beta.size()) throw InputError("pi_loglik: covariate dimension mismatch");
  const PhaseTypeKernel kernel(model.rep);
  return detail::pi_loglik(model, data, kernel, true);
}

/// Conditional survival, hazard and density of Y given x at y.
inline Evaluation predict(const PIModel& model, const Vector& x, double y) {
  model.validate();
  return evaluate(model.conditional(x), y);
}

/// Raw free-parameter count: (pi, T) under the structure, beta, gamma.
inline int free_parameter_count(const StructureSpec& spec, const PIModel& model) {
  return spec.free_parameters() + static_cast<int>(model.beta.size() + model.gamma.size());
}

// ---------------------------------------------------------------------------
// Step 4: (beta, gamma) with (pi, T) frozen

struct RegressionResult {
  Vector beta;
  Vector gamma;
  double loglik = 0.0;
  double initial_loglik = 0.0;
  int evaluations = 0;
};

inline RegressionResult maximize_regression(const PIModel& start, std::span<const RegObservation> data,
                                            const NelderMeadOptions& options = {}) {
  start.validate();
  validate_observations(data);
  const auto nb = start.beta.size();
  const auto ng = start.gamma.size();
  const PhaseTypeKernel kernel(start.rep);
  PIModel work = start;
  auto objective = [&](const Vector& v) {
    work.beta = v.head(nb);
    work.gamma = v.tail(ng);
    return -detail::pi_loglik(work, data, kernel, false);
  };
  Vector x0(nb + ng);
  x0 << start.beta, start.gamma;
  const double f0 = objective(x0);
  if (!std::isfinite(f0)) throw InputError("maximize_regression: objective is not finite at the initial point");
  RegressionResult out{start.beta, start.gamma, -f0, -f0, 1};
  if (nb + ng == 0) return out;
  const auto nm = nelder_mead(objective, x0, options);
  out.evaluations += nm.evaluations;
  if (nm.value < f0) {
    out.beta = nm.x.head(nb);
    out.gamma = nm.x.tail(ng);
    out.loglik = -nm.value;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Full alternation

struct PISpec {
  StructureSpec structure;
  Family family = Family::weibull;
  /// Let the intensity parameter depend on the covariates (gamma has 1 + d
  /// entries) rather than only on an intercept.
  bool theta_regression = false;
  /// Starting value of the intensity parameter.
  double initial_parameter = 1.0;
};

struct PIConfig {
  int max_iterations = 2000;
  double relative_tolerance = 1e-4;
  /// Consecutive iterations below the tolerance required to stop.
  int patience = 5;
  std::uint64_t seed = 1;
  bool standardize = true;
  NelderMeadOptions optimizer{};
  int threads = 1;
};

struct PIFit {
  PIModel model;
  /// pi_loglik at the start and after every outer iteration.
  std::vector<double> loglik_trace;
  int iterations = 0;
  int dead_state_events = 0;
  bool converged = false;
};

namespace detail {

inline std::vector<RegObservation> canonical_order(std::span<const RegObservation> data) {
  std::vector<RegObservation> out(data.begin(), data.end());
  std::stable_sort(out.begin(), out.end(), [](const RegObservation& a, const RegObservation& b) {
    if (a.y != b.y) return a.y < b.y;
    if (a.delta != b.delta) return a.delta < b.delta;
    if (a.weight != b.weight) return a.weight < b.weight;
    for (Eigen::Index j = 0; j < a.x.size(); ++j)
      if (a.x(j) != b.x(j)) return a.x(j) < b.x(j);
    return false;
  });
  return out;
}

inline Standardization weighted_standardization(std::span<const RegObservation> data) {
  const auto d = data[0].x.size();
  Standardization st{Vector::Zero(d), Vector::Ones(d)};
  double w = 0.0;
  for (const auto& o : data) {
    st.center += o.weight * o.x;
    w += o.weight;
  }
  st.center /= w;
  Vector var = Vector::Zero(d);
  for (const auto& o : data) var += o.weight * (o.x - st.center).cwiseAbs2();
  var /= w;
  for (Eigen::Index j = 0; j < d; ++j) st.scale(j) = var(j) > 0.0 ? std::sqrt(var(j)) : 1.0;
  return st;
}

// Coefficients fitted on standardized covariates, expressed on the original
// scale. The constant -sum(center beta / scale) is absorbed into T.
inline PIModel to_original_scale(const PIModel& std_model, const Standardization& st) {
  if (st.empty()) return std_model;
  PIModel out = std_model;
  out.beta = std_model.beta.cwiseQuotient(st.scale);
  const double shift = -st.center.dot(out.beta);
  out.rep = std_model.rep.scaled(std::exp(shift));
  if (std_model.gamma.size() > 1) {
    const auto d = st.center.size();
    Vector slopes = std_model.gamma.tail(d).cwiseQuotient(st.scale);
    out.gamma(0) = std_model.gamma(0) - st.center.dot(slopes);
    out.gamma.tail(d) = slopes;
  }
  out.standardization = st;
  return out;
}

}  // namespace detail

/// Alternates: transform the data with the current (beta, gamma), one EM
/// pass for (pi, T) on the sorted and tie-aggregated z values, then a
/// Nelder-Mead step for (beta, gamma) warm-started at the current values.
inline PIFit fit_pi(std::span<const RegObservation> input, const PISpec& spec, const PIConfig& config) {
  validate_observations(input);
  spec.structure.validate();
  if (config.max_iterations < 1) throw InputError("fit_pi: max_iterations must be positive");
  if (!(config.relative_tolerance > 0.0)) throw InputError("fit_pi: tolerance must be positive");
  if (!(spec.initial_parameter > 0.0)) throw InputError("fit_pi: initial parameter must be positive");

  std::vector<RegObservation> data = detail::canonical_order(input);
  const auto d = data[0].x.size();
  Standardization st;
  if (config.standardize && d > 0) {
    st = detail::weighted_standardization(data);
    for (auto& o : data) o.x = (o.x - st.center).cwiseQuotient(st.scale);
  }
  double total = 0.0;
  for (const auto& o : data) total += o.weight;
  if (!(total > 0.0)) throw InputError("fit_pi: total weight must be positive");

  PIModel model{init_structure(spec.structure, config.seed), spec.family, Vector::Zero(d), Vector(), "exp", {}};
  if (spec.family != Family::identity) {
    model.gamma = Vector::Zero(spec.theta_regression ? 1 + d : 1);
    model.gamma(0) = std::log(spec.initial_parameter);
  }

  auto transformed = [&](const PIModel& m) {
    std::vector<SurvObservation> z;
    z.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
      z.push_back({transform(data[i].y, data[i].x, m, i), data[i].delta, data[i].weight});
    return aggregate_ties(z);
  };

  model.rep = match_scale(model.rep, transformed(model));
  PIFit fit{model, {}, 0, 0, false};
  fit.loglik_trace.push_back(detail::pi_loglik(model, data, PhaseTypeKernel(model.rep), true));

  int quiet = 0;
  for (int it = 0; it < config.max_iterations; ++it) {
    const std::string where = "fit_pi iteration " + std::to_string(it);
    try {
      const auto z = transformed(model);
      EMStep step = em_step(model.rep, z, spec.structure, config.threads);
      model.rep = std::move(step.rep);
      fit.dead_state_events += step.dead_states;
    } catch (const Error& e) {
      throw NumericalError(where + ", EM pass: " + e.what());
    }
    RegressionResult reg;
    try {
      reg = maximize_regression(model, data, config.optimizer);
    } catch (const Error& e) {
      throw NumericalError(where + ", regression step: " + e.what());
    }
    model.beta = reg.beta;
    model.gamma = reg.gamma;
    const double prev = fit.loglik_trace.back();
    fit.loglik_trace.push_back(reg.loglik);
    fit.iterations = it + 1;
    const double change = std::abs(reg.loglik - prev) / std::max(std::abs(prev), 1e-300);
    quiet = change < config.relative_tolerance ? quiet + 1 : 0;
    if (quiet >= config.patience) {
      fit.converged = true;
      break;
    }
  }
  fit.model = detail::to_original_scale(model, st);
  return fit;
}

}  // namespace iph
