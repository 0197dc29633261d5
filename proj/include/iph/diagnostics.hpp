#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "iph/errors.hpp"
#include "iph/phase_type.hpp"
#include "iph/regression.hpp"

namespace iph::diagnostics {

/// Right-continuous step function with an initial value before the first
/// jump. Bounds and variance are empty when not computed.
struct StepFunction {
  double initial = 1.0;
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> variance;
  std::vector<double> lower;
  std::vector<double> upper;
  /// No jumps because every observation was censored.
  bool all_censored = false;

  std::size_t index_at(double t) const {
    return static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
  }
  double operator()(double t) const {
    const auto i = index_at(t);
    return i == 0 ? initial : values[i - 1];
  }
  double lower_at(double t) const {
    const auto i = index_at(t);
    return i == 0 ? initial : lower[i - 1];
  }
  double upper_at(double t) const {
    const auto i = index_at(t);
    return i == 0 ? initial : upper[i - 1];
  }
};

struct TimeStatus {
  double time;
  int delta;
};

namespace detail {

struct RiskTable {
  std::vector<double> times;
  std::vector<double> deaths;
  std::vector<double> at_risk;
};

// Distinct event times with death counts and risk sets; censorings tied
// with an event count as at risk at that event.
inline RiskTable risk_table(std::span<const TimeStatus> data) {
  if (data.empty()) throw InputError("estimator: no observations");
  std::vector<TimeStatus> d(data.begin(), data.end());
  for (const auto& o : d)
    if (!std::isfinite(o.time) || o.time < 0.0 || (o.delta != 0 && o.delta != 1))
      throw InputError("estimator: times must be finite and non-negative, status 0 or 1");
  std::sort(d.begin(), d.end(), [](const TimeStatus& a, const TimeStatus& b) { return a.time < b.time; });
  RiskTable rt;
  double n = static_cast<double>(d.size());
  std::size_t i = 0;
  while (i < d.size()) {
    std::size_t j = i;
    double deaths = 0.0;
    while (j < d.size() && d[j].time == d[i].time) deaths += d[j++].delta;
    if (deaths > 0.0) {
      rt.times.push_back(d[i].time);
      rt.deaths.push_back(deaths);
      rt.at_risk.push_back(n);
    }
    n -= static_cast<double>(j - i);
    i = j;
  }
  return rt;
}

}  // namespace detail

/// Product-limit estimator with Greenwood variance and 95% bounds computed
/// on the log-survival scale.
inline StepFunction kaplan_meier(std::span<const TimeStatus> data, double z = 1.959963984540054) {
  const auto rt = detail::risk_table(data);
  StepFunction f;
  f.initial = 1.0;
  f.all_censored = rt.times.empty();
  double s = 1.0, g = 0.0;
  for (std::size_t i = 0; i < rt.times.size(); ++i) {
    const double d = rt.deaths[i], n = rt.at_risk[i];
    s *= 1.0 - d / n;
    f.times.push_back(rt.times[i]);
    f.values.push_back(s);
    if (s > 0.0) {
      g += d / (n * (n - d));
      const double half = z * std::sqrt(g);
      f.variance.push_back(s * s * g);
      f.lower.push_back(std::max(0.0, s * std::exp(-half)));
      f.upper.push_back(std::min(1.0, s * std::exp(half)));
    } else {
      f.variance.push_back(0.0);
      f.lower.push_back(0.0);
      f.upper.push_back(0.0);
    }
  }
  return f;
}

/// Cumulative hazard sum d_i / n_i with variance sum d_i / n_i^2.
inline StepFunction nelson_aalen(std::span<const TimeStatus> data, double z = 1.959963984540054) {
  const auto rt = detail::risk_table(data);
  StepFunction f;
  f.initial = 0.0;
  f.all_censored = rt.times.empty();
  double h = 0.0, v = 0.0;
  for (std::size_t i = 0; i < rt.times.size(); ++i) {
    h += rt.deaths[i] / rt.at_risk[i];
    v += rt.deaths[i] / (rt.at_risk[i] * rt.at_risk[i]);
    f.times.push_back(rt.times[i]);
    f.values.push_back(h);
    f.variance.push_back(v);
    f.lower.push_back(std::max(0.0, h - z * std::sqrt(v)));
    f.upper.push_back(h + z * std::sqrt(v));
  }
  return f;
}

/// time, estimate, lower, upper; one row per jump.
inline void write_estimator_csv(std::ostream& os, const StepFunction& f) {
  os << "time,estimate,lower,upper\n" << std::setprecision(17);
  for (std::size_t i = 0; i < f.times.size(); ++i)
    os << f.times[i] << ',' << f.values[i] << ',' << (f.lower.empty() ? f.values[i] : f.lower[i]) << ','
       << (f.upper.empty() ? f.values[i] : f.upper[i]) << '\n';
}

// ---------------------------------------------------------------------------
// Residuals

/// r_i = -log of the model survival at (y_i, x_i); flags carried through.
inline std::vector<TimeStatus> cox_snell_residuals(const PIModel& model, std::span<const RegObservation> data) {
  model.validate();
  std::vector<TimeStatus> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    model.check_row(data[i].x);
    out.push_back({evaluate(model.conditional(data[i].x), data[i].y).cum_hazard, data[i].delta});
  }
  return out;
}

inline std::vector<TimeStatus> cox_snell_residuals(const IPHModel& model, std::span<const SurvObservation> data) {
  std::vector<TimeStatus> out;
  out.reserve(data.size());
  for (const auto& o : data) out.push_back({evaluate(model, o.z).cum_hazard, o.delta});
  return out;
}

/// Fraction of a uniform grid over the band's support (up to the last jump
/// with positive survival) on which the unit-exponential survival e^{-t}
/// lies inside the Kaplan-Meier 95% band.
inline double band_coverage(const StepFunction& km, int grid = 1000) {
  double t_max = 0.0;
  for (std::size_t i = 0; i < km.times.size(); ++i)
    if (km.values[i] > 0.0) t_max = km.times[i];
  if (!(t_max > 0.0)) return 0.0;
  int inside = 0;
  for (int g = 0; g < grid; ++g) {
    const double t = t_max * (g + 0.5) / grid;
    const double s = std::exp(-t);
    if (s >= km.lower_at(t) && s <= km.upper_at(t)) ++inside;
  }
  return static_cast<double>(inside) / grid;
}

/// Least-squares slope (with intercept) of the Nelson-Aalen cumulative
/// hazard of the residuals against the uncensored residuals themselves.
inline double nelson_aalen_slope(std::span<const TimeStatus> residuals) {
  const auto na = nelson_aalen(residuals);
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (const auto& r : residuals) {
    if (!r.delta) continue;
    const double y = na(r.time);
    sx += r.time, sy += y, sxx += r.time * r.time, sxy += r.time * y, n += 1;
  }
  const double den = n * sxx - sx * sx;
  if (n < 2 || !(den > 0.0)) throw DegenerateError("nelson_aalen_slope: fewer than two distinct residuals");
  return (n * sxy - sx * sy) / den;
}

struct ResidualReport {
  double band_coverage;
  double slope;
  bool pass(double coverage_level = 0.95, double lo = 0.9, double hi = 1.1) const {
    return band_coverage >= coverage_level && slope >= lo && slope <= hi;
  }
};

inline ResidualReport residual_report(std::span<const TimeStatus> residuals) {
  return {band_coverage(kaplan_meier(residuals)), nelson_aalen_slope(residuals)};
}

// ---------------------------------------------------------------------------
// Information criteria

struct InformationCriteria {
  double aic;
  double bic;
  static constexpr const char* caveat =
      "parameter count is the raw number of free entries; effective degrees of freedom of phase-type models are "
      "generally unknown";
};

inline InformationCriteria information_criteria(double loglik, int n_params, std::size_t n_obs) {
  if (n_obs < 1) throw InputError("information_criteria: n_obs must be at least 1");
  if (n_params < 0) throw InputError("information_criteria: n_params must be non-negative");
  const double k = n_params;
  return {-2.0 * loglik + 2.0 * k, -2.0 * loglik + k * std::log(static_cast<double>(n_obs))};
}

// ---------------------------------------------------------------------------
// Simulation study

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Child seed i of a root seed: splitmix64(splitmix64(root) + i).
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t i) {
  return detail::splitmix64(detail::splitmix64(root) + i);
}

/// Generating models of the two-group study; group 1 is homogeneous with
/// doubled rates.
inline IPHModel study_group_model(int group) {
  Vector pi(3);
  pi << 0.25, 0.5, 0.25;
  Vector d(3);
  d << -10.0, -1.0, -0.1;
  if (group == 0) return {PHRepresentation(pi, d.asDiagonal()), Inhomogeneity::weibull(1.5)};
  if (group == 1) return {PHRepresentation(pi, (2.0 * d).asDiagonal()), Inhomogeneity::identity()};
  throw InputError("study_group_model: group must be 0 or 1");
}

/// The same two groups as one proportional-intensities model with covariate
/// x = group: beta = log 2, theta = exp(gamma_0 + gamma_1 x).
inline PIModel study_true_model() {
  Vector gamma(2);
  gamma << std::log(1.5), -std::log(1.5);
  return {study_group_model(0).rep, Family::weibull, Vector::Constant(1, std::log(2.0)), gamma, "exp", {}};
}

struct StudyConfig {
  std::size_t per_group = 500;
  double censoring_rate = 0.1;
};

/// 500 + 500 rows (y, delta, x = group) censored by independent
/// exponentials of rate 1/10. Streams: derive_seed(seed, 0) for group 0,
/// 1 for group 1, 2 for censoring.
inline std::vector<RegObservation> simulate_study(std::uint64_t seed, const StudyConfig& cfg = {}) {
  std::vector<RegObservation> out;
  std::mt19937_64 cens(derive_seed(seed, 2));
  std::exponential_distribution<double> e(cfg.censoring_rate);
  for (int g = 0; g < 2; ++g) {
    const IPHModel m = study_group_model(g);
    std::mt19937_64 gen(derive_seed(seed, static_cast<std::uint64_t>(g)));
    for (std::size_t i = 0; i < cfg.per_group; ++i) {
      const double z = sample_one(m, gen);
      const double c = e(cens);
      out.push_back({std::min(z, c), z <= c ? 1 : 0, 1.0, Vector::Constant(1, g)});
    }
  }
  std::size_t censored = 0;
  for (const auto& o : out) censored += o.delta == 0;
  const double frac = static_cast<double>(censored) / static_cast<double>(out.size());
  if (cfg.per_group == 500 && cfg.censoring_rate == 0.1 && (frac < 0.05 || frac > 0.15))
    throw NumericalError("simulate_study: censored fraction " + std::to_string(frac) + " outside [0.05, 0.15]");
  return out;
}

/// The three fitted variants of the study.
enum class StudyVariant { weibull_ph, scalar, correct };

inline PISpec study_spec(StudyVariant v) {
  switch (v) {
    case StudyVariant::weibull_ph:
      return {{Structure::general, 1}, Family::weibull, false, 1.0};
    case StudyVariant::scalar:
      return {{Structure::general, 1}, Family::weibull, true, 1.0};
    case StudyVariant::correct:
      return {{Structure::general, 3}, Family::weibull, true, 1.0};
  }
  throw InputError("unknown study variant");
}

inline std::string to_string(StudyVariant v) {
  switch (v) {
    case StudyVariant::weibull_ph:
      return "weibull_ph";
    case StudyVariant::scalar:
      return "scalar";
    case StudyVariant::correct:
      return "correct";
  }
  return "?";
}

}  // namespace iph::diagnostics
