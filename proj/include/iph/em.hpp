#pragma once

// Weighted EM for PH(pi, T) under right-censoring. The E-step conditional
// expectations need the convolution integrals
//   J(z) = int_0^z e^{T(z-u)} v pi e^{Tu} du,
// with v = t for exact and v = e for censored observations; those come from
// one 2p x 2p block exponential per distinct observation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <thread>
#include <vector>

#include "iph/errors.hpp"
#include "iph/linalg.hpp"
#include "iph/phase_type.hpp"

namespace iph {

/// One PH-scale observation; delta = 1 exact, 0 right-censored at z.
struct SurvObservation {
  double z = 0.0;
  int delta = 1;
  double weight = 1.0;
};

/// Expected complete-data statistics given the observations.
struct SufficientStats {
  Vector initiations;  // B_k
  Vector sojourn;      // V_k
  Matrix jumps;        // N_kl, zero diagonal
  Vector absorptions;  // N_k
  /// Observed-data log-likelihood of the representation the statistics were
  /// computed under (a by-product of the denominators).
  double loglik = 0.0;

  static SufficientStats zero(Eigen::Index p) {
    return {Vector::Zero(p), Vector::Zero(p), Matrix::Zero(p, p), Vector::Zero(p), 0.0};
  }
  SufficientStats& operator+=(const SufficientStats& o) {
    initiations += o.initiations;
    sojourn += o.sojourn;
    jumps += o.jumps;
    absorptions += o.absorptions;
    loglik += o.loglik;
    return *this;
  }
};

enum class Structure { general, coxian, generalized_coxian };

inline std::string to_string(Structure s) {
  switch (s) {
    case Structure::general:
      return "general";
    case Structure::coxian:
      return "coxian";
    case Structure::generalized_coxian:
      return "generalized_coxian";
  }
  return "unknown";
}

inline Structure structure_from_string(const std::string& s) {
  if (s == "general") return Structure::general;
  if (s == "coxian") return Structure::coxian;
  if (s == "generalized_coxian" || s == "gcoxian") return Structure::generalized_coxian;
  throw InputError("unknown structure '" + s + "'");
}

/// Zero pattern imposed on (pi, T). Coxian chains only move k -> k+1.
struct StructureSpec {
  Structure kind = Structure::general;
  int dimension = 1;

  bool allows_jump(Eigen::Index k, Eigen::Index l) const {
    if (k == l) return false;
    return kind == Structure::general || l == k + 1;
  }
  bool free_initial() const { return kind != Structure::coxian; }

  /// Raw count of free parameters in (pi, T) under the pattern.
  int free_parameters() const {
    const int p = dimension;
    const int initial = free_initial() ? p - 1 : 0;
    const int jumps = kind == Structure::general ? p * (p - 1) : p - 1;
    return initial + jumps + p;
  }

  void validate() const {
    if (dimension < 1) throw InputError("structure: dimension must be at least one");
  }

  /// True when rep respects the zero pattern.
  bool conforms(const PHRepresentation& rep) const {
    const auto p = rep.order();
    if (p != dimension) return false;
    for (Eigen::Index k = 0; k < p; ++k)
      for (Eigen::Index l = 0; l < p; ++l)
        if (k != l && !allows_jump(k, l) && rep.T()(k, l) != 0.0) return false;
    if (!free_initial())
      for (Eigen::Index k = 1; k < p; ++k)
        if (rep.pi()(k) != 0.0) return false;
    return true;
  }
};

struct EMConfig {
  int max_iterations = 2000;
  double relative_loglik_tolerance = 1e-4;
  std::uint64_t seed = 1;
  /// Worker threads for the E-step. Contributions are summed per block of
  /// `reduction_block` observations in index order, then over blocks in
  /// block order, so the result does not depend on the thread count.
  int threads = 1;
  int reduction_block = 64;
};

inline void validate_observations(std::span<const SurvObservation> data) {
  if (data.empty()) throw InputError("no observations");
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& o = data[i];
    if (!(o.z >= 0.0) || !std::isfinite(o.z))
      throw InputError("observation " + std::to_string(i) + ": time must be finite and >= 0");
    if (!(o.weight >= 0.0) || !std::isfinite(o.weight))
      throw InputError("observation " + std::to_string(i) + ": weight must be finite and >= 0");
    if (o.delta != 0 && o.delta != 1)
      throw InputError("observation " + std::to_string(i) + ": status must be 0 or 1");
  }
}

inline double total_weight(std::span<const SurvObservation> data) {
  double w = 0.0;
  for (const auto& o : data) w += o.weight;
  return w;
}

/// Sorts by (z, delta) and merges ties into one observation carrying the
/// summed weight. Zero-weight observations are dropped.
inline std::vector<SurvObservation> aggregate_ties(std::span<const SurvObservation> data) {
  std::vector<SurvObservation> sorted(data.begin(), data.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return a.z < b.z || (a.z == b.z && a.delta < b.delta);
  });
  std::vector<SurvObservation> out;
  out.reserve(sorted.size());
  for (const auto& o : sorted) {
    if (o.weight == 0.0) continue;
    if (!out.empty() && out.back().z == o.z && out.back().delta == o.delta)
      out.back().weight += o.weight;
    else
      out.push_back(o);
  }
  return out;
}

// ---------------------------------------------------------------------------

/// Random valid starting point with the structure's zero pattern:
/// Dirichlet(1, ..., 1) initial vector where free, allowed jump rates and
/// exit rates uniform on (0, 1].
inline PHRepresentation init_structure(const StructureSpec& spec, std::uint64_t seed) {
  spec.validate();
  const Eigen::Index p = spec.dimension;
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto open_unit = [&] { return 1.0 - unif(gen); };

  Vector pi = Vector::Zero(p);
  if (spec.free_initial()) {
    std::exponential_distribution<double> expo(1.0);
    for (Eigen::Index k = 0; k < p; ++k) pi(k) = expo(gen);
    pi /= pi.sum();
  } else {
    pi(0) = 1.0;
  }
  Matrix T = Matrix::Zero(p, p);
  for (Eigen::Index k = 0; k < p; ++k) {
    double out_rate = 0.0;
    for (Eigen::Index l = 0; l < p; ++l) {
      if (!spec.allows_jump(k, l)) continue;
      T(k, l) = open_unit();
      out_rate += T(k, l);
    }
    T(k, k) = -(out_rate + open_unit());
  }
  return PHRepresentation(pi, T);
}

namespace detail {

// Contribution of one observation. Throws DegenerateError when the
// likelihood term vanishes.
inline void accumulate_observation(const PHRepresentation& rep, const SurvObservation& obs,
                                   std::size_t index, SufficientStats& acc) {
  if (obs.weight == 0.0) return;
  const auto p = rep.order();
  const Vector& pi = rep.pi();
  const Vector& t = rep.exit_rates();
  const Matrix& T = rep.T();
  const bool exact = obs.delta == 1;
  const Vector v = exact ? t : Vector::Ones(p);
  const Matrix B = v * pi.transpose();

  auto block = linalg::exp_and_conv_integral(T, B, obs.z);
  double log_scale = 0.0;
  Vector b = block.exp * v;
  double denom = pi.dot(b);
  if (!(denom >= 1e-250)) {
    // renormalised block exponential; every ratio below is scale free
    const auto pp = 2 * p;
    Matrix big = Matrix::Zero(pp, pp);
    big.topLeftCorner(p, p) = T * obs.z;
    big.topRightCorner(p, p) = B * obs.z;
    big.bottomRightCorner(p, p) = T * obs.z;
    auto scaled = linalg::mexp_scaled(big);
    block.exp = scaled.matrix.topLeftCorner(p, p);
    block.integral = scaled.matrix.topRightCorner(p, p);
    log_scale = scaled.log_scale;
    b = block.exp * v;
    denom = pi.dot(b);
  }
  if (!(denom > 0.0) || !std::isfinite(denom))
    throw DegenerateError(exact ? "E-step: zero density at an exact observation"
                                : "E-step: zero survival at a censored observation",
                          index);

  const double w = obs.weight / denom;
  acc.loglik += obs.weight * (std::log(denom) + log_scale);
  acc.initiations += w * pi.cwiseProduct(b);
  acc.sojourn += w * block.integral.diagonal();
  for (Eigen::Index k = 0; k < p; ++k)
    for (Eigen::Index l = 0; l < p; ++l)
      if (l != k && T(k, l) != 0.0) acc.jumps(k, l) += w * T(k, l) * block.integral(l, k);
  if (exact) {
    const RowVector a = pi.transpose() * block.exp;
    acc.absorptions += w * t.cwiseProduct(a.transpose());
  }
}

}  // namespace detail

/// Conditional expectations of (B, V, N_kl, N_k) given the observations,
/// each observation's contribution multiplied by its weight.
inline SufficientStats e_step(const PHRepresentation& rep, std::span<const SurvObservation> data,
                              int threads = 1, int reduction_block = 64) {
  validate_observations(data);
  const auto p = rep.order();
  const std::size_t block = static_cast<std::size_t>(std::max(1, reduction_block));
  const std::size_t nblocks = (data.size() + block - 1) / block;
  std::vector<SufficientStats> partial(nblocks, SufficientStats::zero(p));

  auto run_block = [&](std::size_t b) {
    const std::size_t lo = b * block;
    const std::size_t hi = std::min(data.size(), lo + block);
    for (std::size_t i = lo; i < hi; ++i) detail::accumulate_observation(rep, data[i], i, partial[b]);
  };

  const std::size_t workers = std::min<std::size_t>(std::max(1, threads), nblocks);
  if (workers <= 1) {
    for (std::size_t b = 0; b < nblocks; ++b) run_block(b);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t b = w; b < nblocks; b += workers) run_block(b);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  SufficientStats total = SufficientStats::zero(p);
  for (const auto& s : partial) total += s;
  return total;
}

/// Explicit maximisers of the complete-data likelihood. A state with no
/// expected sojourn keeps its row from `previous` (counted in
/// `dead_states`); without a previous representation it is an error.
inline PHRepresentation m_step(const SufficientStats& stats, double total_weight,
                               const StructureSpec& spec,
                               const PHRepresentation* previous = nullptr,
                               int* dead_states = nullptr) {
  spec.validate();
  const Eigen::Index p = spec.dimension;
  if (stats.initiations.size() != p) throw InputError("m_step: statistics do not match dimension");
  if (!(total_weight > 0.0)) throw InputError("m_step: total weight must be positive");

  Vector pi = Vector::Zero(p);
  if (spec.free_initial()) {
    pi = stats.initiations / total_weight;
    pi = pi.cwiseMax(0.0);
    pi /= pi.sum();
  } else {
    pi(0) = 1.0;
  }

  Matrix T = Matrix::Zero(p, p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const double v = stats.sojourn(k);
    double out_rate = 0.0;
    if (v > 0.0 && std::isfinite(v)) {
      for (Eigen::Index l = 0; l < p; ++l) {
        if (!spec.allows_jump(k, l)) continue;
        T(k, l) = std::max(0.0, stats.jumps(k, l)) / v;
        out_rate += T(k, l);
      }
      const double exit = std::max(0.0, stats.absorptions(k)) / v;
      T(k, k) = -out_rate - exit;
    }
    if (!(T(k, k) < 0.0)) {
      if (previous == nullptr)
        throw DegenerateError("m_step: state " + std::to_string(k) + " has no expected sojourn");
      T.row(k) = previous->T().row(k);
      if (dead_states) ++*dead_states;
    }
  }
  return PHRepresentation(pi, T);
}

/// Observed-data log-likelihood, robust to survival underflow.
inline double loglik(const PHRepresentation& rep, std::span<const SurvObservation> data) {
  validate_observations(data);
  double ll = 0.0;
  for (const auto& o : data) {
    if (o.weight == 0.0) continue;
    const RowVector a = rep.pi().transpose() * linalg::mexp(rep.T() * o.z);
    double value = o.delta == 1 ? a.dot(rep.exit_rates()) : a.sum();
    double log_value;
    if (value >= survival_underflow_limit) {
      log_value = std::log(value);
    } else {
      const auto scaled = linalg::mexp_scaled(rep.T() * o.z);
      const RowVector b = rep.pi().transpose() * scaled.matrix;
      value = o.delta == 1 ? b.dot(rep.exit_rates()) : b.sum();
      log_value = value > 0.0 ? std::log(value) + scaled.log_scale
                              : -std::numeric_limits<double>::infinity();
    }
    ll += o.weight * log_value;
  }
  return ll;
}

// ---------------------------------------------------------------------------

struct EMStep {
  PHRepresentation rep;        // after the M-step
  double loglik_before = 0.0;  // of the representation the E-step used
  int dead_states = 0;
};

/// One E-step followed by one M-step.
inline EMStep em_step(const PHRepresentation& rep, std::span<const SurvObservation> data,
                      const StructureSpec& spec, int threads = 1, int reduction_block = 64) {
  const SufficientStats stats = e_step(rep, data, threads, reduction_block);
  int dead = 0;
  PHRepresentation next = m_step(stats, total_weight(data), spec, &rep, &dead);
  return {std::move(next), stats.loglik, dead};
}

/// Rescales the chain so that its mean matches the weighted mean of the
/// observed times.
inline PHRepresentation match_scale(const PHRepresentation& rep,
                                    std::span<const SurvObservation> data) {
  double wz = 0.0, w = 0.0;
  for (const auto& o : data) {
    wz += o.weight * o.z;
    w += o.weight;
  }
  if (!(wz > 0.0) || !(w > 0.0)) return rep;
  const Vector ones = Vector::Ones(rep.order());
  const double model_mean = rep.pi().dot((-rep.T()).partialPivLu().solve(ones));
  const double c = model_mean / (wz / w);
  if (!(c > 0.0) || !std::isfinite(c)) return rep;
  return rep.scaled(c);
}

struct PHFit {
  PHRepresentation rep;
  /// Log-likelihood after 0, 1, 2, ... M-steps; the last entry belongs to rep.
  std::vector<double> loglik_trace;
  int iterations = 0;
  int dead_state_events = 0;
  bool converged = false;
};

/// Runs EM from a seeded random start (rescaled to the data) until the
/// relative log-likelihood change drops below the tolerance or the
/// iteration budget is spent.
inline PHFit fit_ph(std::span<const SurvObservation> data, const StructureSpec& spec,
                    const EMConfig& config) {
  validate_observations(data);
  spec.validate();
  if (config.max_iterations < 1) throw InputError("fit_ph: max_iterations must be positive");
  if (!(config.relative_loglik_tolerance > 0.0)) throw InputError("fit_ph: tolerance must be > 0");
  const auto agg = aggregate_ties(data);
  if (agg.empty() || !(total_weight(agg) > 0.0))
    throw InputError("fit_ph: total weight must be positive");

  PHFit fit{match_scale(init_structure(spec, config.seed), agg), {}, 0, 0, false};
  for (int it = 0; it < config.max_iterations; ++it) {
    EMStep step = [&] {
      try {
        return em_step(fit.rep, agg, spec, config.threads, config.reduction_block);
      } catch (const Error& e) {
        throw NumericalError("EM iteration " + std::to_string(it) + ": " + e.what());
      }
    }();
    fit.loglik_trace.push_back(step.loglik_before);
    const auto n = fit.loglik_trace.size();
    if (n >= 2) {
      const double prev = fit.loglik_trace[n - 2];
      const double cur = fit.loglik_trace[n - 1];
      if (std::abs(cur - prev) <= config.relative_loglik_tolerance * std::abs(prev)) {
        fit.converged = true;
        break;
      }
    }
    fit.rep = std::move(step.rep);
    fit.dead_state_events += step.dead_states;
    fit.iterations = it + 1;
  }
  if (!fit.converged) fit.loglik_trace.push_back(loglik(fit.rep, agg));
  return fit;
}

inline void write_trace_csv(std::ostream& os, const std::vector<double>& trace) {
  os << "iteration,loglik\n" << std::setprecision(17);
  for (std::size_t i = 0; i < trace.size(); ++i) os << i << ',' << trace[i] << '\n';
}

}  // namespace iph
