#pragma once

// Phase-type (PH) and inhomogeneous phase-type (IPH) distributions.
//
// An IPH(pi, T, lambda) variable is Y = g(Z) with Z ~ PH(pi, T) and
// g^{-1}(y) = int_0^y lambda(s) ds. All evaluation reduces to the PH
// quantities pi e^{Tz} t (density) and pi e^{Tz} e (survival) at
// z = g^{-1}(y).

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "iph/errors.hpp"
#include "iph/linalg.hpp"

namespace iph {

enum class Family { identity, weibull, gompertz };

inline std::string to_string(Family f) {
  switch (f) {
    case Family::identity:
      return "identity";
    case Family::weibull:
      return "weibull";
    case Family::gompertz:
      return "gompertz";
  }
  return "unknown";
}

inline Family family_from_string(const std::string& s) {
  if (s == "identity") return Family::identity;
  if (s == "weibull") return Family::weibull;
  if (s == "gompertz") return Family::gompertz;
  throw InputError("unknown inhomogeneity family '" + s + "'");
}

/// Intensity function lambda(s; theta) of one of the supported families,
/// optionally shifted in time (lambda(s + shift), used for residual lives).
///   identity: lambda = 1
///   weibull:  lambda = theta s^{theta-1},   g^{-1}(y) = y^theta
///   gompertz: lambda = e^{beta s},          g^{-1}(y) = (e^{beta y} - 1)/beta
class Inhomogeneity {
 public:
  Inhomogeneity() = default;

  static Inhomogeneity identity() { return Inhomogeneity(Family::identity, 1.0); }
  static Inhomogeneity weibull(double theta) { return Inhomogeneity(Family::weibull, theta); }
  static Inhomogeneity gompertz(double beta) { return Inhomogeneity(Family::gompertz, beta); }
  static Inhomogeneity of(Family family, double parameter) {
    return family == Family::identity ? identity() : Inhomogeneity(family, parameter);
  }

  Family family() const { return family_; }
  double parameter() const { return param_; }
  double shift() const { return shift_; }

  /// lambda(. + x) relative to the current origin.
  Inhomogeneity shifted(double x) const {
    if (!(x >= 0.0) || !std::isfinite(x)) throw InputError("Inhomogeneity::shifted: bad shift");
    Inhomogeneity out = *this;
    out.shift_ += x;
    return out;
  }

  double intensity(double s) const { return base_intensity(s + shift_); }

  /// g^{-1}(y) = int_0^y lambda(s) ds.
  double integrated(double y) const {
    if (shift_ == 0.0) return base_integrated(y);
    if (family_ == Family::gompertz)
      return std::exp(param_ * shift_) * std::expm1(param_ * y) / param_;
    return base_integrated(y + shift_) - base_integrated(shift_);
  }

  /// g(z), the inverse of integrated().
  double inverse(double z) const {
    if (shift_ == 0.0) return base_inverse(z);
    if (family_ == Family::gompertz)
      return std::log1p(param_ * z * std::exp(-param_ * shift_)) / param_;
    return base_inverse(z + base_integrated(shift_)) - shift_;
  }

 private:
  Inhomogeneity(Family family, double param) : family_(family), param_(param) {
    if (!(param > 0.0) || !std::isfinite(param))
      throw InputError("inhomogeneity parameter must be positive and finite");
  }

  double base_intensity(double s) const {
    switch (family_) {
      case Family::identity:
        return 1.0;
      case Family::weibull:
        return param_ * std::pow(s, param_ - 1.0);
      case Family::gompertz:
        return std::exp(param_ * s);
    }
    return 0.0;
  }
  double base_integrated(double y) const {
    switch (family_) {
      case Family::identity:
        return y;
      case Family::weibull:
        return std::pow(y, param_);
      case Family::gompertz:
        return std::expm1(param_ * y) / param_;
    }
    return 0.0;
  }
  double base_inverse(double z) const {
    switch (family_) {
      case Family::identity:
        return z;
      case Family::weibull:
        return std::pow(z, 1.0 / param_);
      case Family::gompertz:
        return std::log1p(param_ * z) / param_;
    }
    return 0.0;
  }

  Family family_ = Family::identity;
  double param_ = 1.0;
  double shift_ = 0.0;
};

// ---------------------------------------------------------------------------

inline constexpr double probability_sum_tolerance = 1e-12;

/// Throws InputError unless T is a sub-intensity matrix: negative diagonal,
/// non-negative off-diagonal, non-positive row sums, some row with exit.
inline void validate_sub_intensity(const Matrix& T) {
  linalg::require_finite(T, "sub-intensity matrix");
  linalg::require_square(T, "sub-intensity matrix");
  const auto p = T.rows();
  bool absorbing = false;
  for (Eigen::Index k = 0; k < p; ++k) {
    if (!(T(k, k) < 0.0)) throw InputError("sub-intensity matrix: diagonal entries must be negative");
    double off = 0.0;
    for (Eigen::Index l = 0; l < p; ++l) {
      if (l == k) continue;
      if (T(k, l) < 0.0) throw InputError("sub-intensity matrix: negative off-diagonal entry");
      off += T(k, l);
    }
    const double exit = -(T(k, k) + off);
    if (exit < -1e-12 * std::abs(T(k, k)))
      throw InputError("sub-intensity matrix: positive row sum");
    if (exit > 0.0) absorbing = true;
  }
  if (!absorbing) throw InputError("sub-intensity matrix: absorption is unreachable");
}

/// PH(pi, T): initial distribution over p transient states and the
/// sub-intensity matrix among them.
class PHRepresentation {
 public:
  PHRepresentation(Vector pi, Matrix T) : pi_(std::move(pi)), T_(std::move(T)) {
    validate_sub_intensity(T_);
    if (pi_.size() != T_.rows()) throw InputError("PH representation: pi and T differ in order");
    if (!pi_.allFinite()) throw InputError("PH representation: non-finite pi");
    if ((pi_.array() < 0.0).any()) throw InputError("PH representation: negative initial probability");
    if (std::abs(pi_.sum() - 1.0) > probability_sum_tolerance)
      throw InputError("PH representation: initial probabilities must sum to one");
    exit_ = (-T_.rowwise().sum()).cwiseMax(0.0);
  }

  Eigen::Index order() const { return T_.rows(); }
  const Vector& pi() const { return pi_; }
  const Matrix& T() const { return T_; }
  /// t = -T e
  const Vector& exit_rates() const { return exit_; }

  /// Same chain with every rate multiplied by c > 0.
  PHRepresentation scaled(double c) const { return PHRepresentation(pi_, T_ * c); }

 private:
  Vector pi_;
  Matrix T_;
  Vector exit_;
};

struct IPHModel {
  PHRepresentation rep;
  Inhomogeneity inhom;
};

// ---------------------------------------------------------------------------
// Evaluation

inline constexpr double survival_underflow_limit = 1e-300;

struct Evaluation {
  double density = 0.0;
  double survival = 1.0;
  double hazard = 0.0;
  double cum_hazard = 0.0;
  /// Survival fell below 1e-300; survival and density are not
  /// representable, hazard and cum_hazard come from the renormalised
  /// exponential (or from the tail asymptote when g^{-1}(y) overflows).
  bool survival_underflow = false;
};

struct TailParams {
  double eta = 0.0;       // -(largest real eigenvalue of T)
  int multiplicity = 1;   // algebraic multiplicity of that eigenvalue
};

/// Exponential decay rate and (algebraic) multiplicity of the dominant
/// eigenvalue: the PH survival behaves like c y^{n-1} e^{-eta y}.
inline TailParams tail_params(const Matrix& T) {
  validate_sub_intensity(T);
  Eigen::EigenSolver<Matrix> es(T, false);
  const ComplexVector ev = es.eigenvalues();
  Complex top = ev(0);
  for (const auto& v : ev)
    if (v.real() > top.real()) top = v;
  TailParams out;
  out.eta = -top.real();
  out.multiplicity = 0;
  const double tol = 1e-5 * std::max(1.0, std::abs(top));
  for (const auto& v : ev)
    if (std::abs(v - top) <= tol) ++out.multiplicity;
  return out;
}

/// PH-scale density pi e^{Tz} t and survival pi e^{Tz} e by mexp.
struct PHValues {
  double density;
  double survival;
};

inline PHValues evaluate_ph(const PHRepresentation& rep, double z) {
  if (!(z >= 0.0)) throw InputError("evaluate: time must be non-negative");
  const RowVector a = rep.pi().transpose() * linalg::mexp(rep.T() * z);
  return {a.dot(rep.exit_rates()), a.sum()};
}

inline Evaluation evaluate(const IPHModel& model, double y) {
  if (!(y >= 0.0)) throw InputError("evaluate: y must be non-negative");
  const auto& rep = model.rep;
  const double lambda = model.inhom.intensity(y);
  const double z = model.inhom.integrated(y);
  Evaluation out;
  if (!std::isfinite(z)) {
    const TailParams tail = tail_params(rep.T());
    out.survival = 0.0;
    out.density = 0.0;
    out.cum_hazard = std::numeric_limits<double>::infinity();
    out.hazard = tail.eta * lambda;
    out.survival_underflow = true;
    return out;
  }
  const RowVector a = rep.pi().transpose() * linalg::mexp(rep.T() * z);
  const double s = a.sum();
  const double f0 = a.dot(rep.exit_rates());
  if (s >= survival_underflow_limit) {
    out.survival = s;
    out.density = lambda * f0;
    out.hazard = lambda * f0 / s;
    out.cum_hazard = -std::log(s);
    return out;
  }
  const auto scaled = linalg::mexp_scaled(rep.T() * z);
  const RowVector b = rep.pi().transpose() * scaled.matrix;
  const double log_s = std::log(b.sum()) + scaled.log_scale;
  out.survival = std::exp(log_s);
  out.density = lambda * std::exp(std::log(b.dot(rep.exit_rates())) + scaled.log_scale);
  out.hazard = lambda * b.dot(rep.exit_rates()) / b.sum();
  out.cum_hazard = -log_s;
  out.survival_underflow = true;
  return out;
}

/// Fast repeated evaluation of pi e^{Tz} t and pi e^{Tz} e for one fixed
/// representation. Uses the eigendecomposition of T when it is well
/// conditioned and the modal sum shows no cancellation, mexp otherwise.
class PhaseTypeKernel {
 public:
  explicit PhaseTypeKernel(const PHRepresentation& rep)
      : pi_(rep.pi()), T_(rep.T()), t_(rep.exit_rates()) {
    const auto p = T_.rows();
    Eigen::EigenSolver<Matrix> es(T_, true);
    if (es.info() != Eigen::Success) return;
    const ComplexMatrix V = es.eigenvectors();
    Eigen::JacobiSVD<ComplexMatrix> svd(V);
    const auto& sv = svd.singularValues();
    if (!(sv(p - 1) > 0.0) || sv(0) / sv(p - 1) > 1e6) return;
    const Eigen::PartialPivLU<ComplexMatrix> lu(V);
    const ComplexVector left = (pi_.transpose().cast<Complex>() * V).transpose();
    const ComplexVector right_t = lu.solve(t_.cast<Complex>());
    const ComplexVector right_e = lu.solve(ComplexVector::Ones(p));
    eig_ = es.eigenvalues();
    coef_density_ = left.cwiseProduct(right_t);
    coef_survival_ = left.cwiseProduct(right_e);
    spectral_ = true;
  }

  PHValues operator()(double z) const {
    if (spectral_) {
      Complex d = 0.0, s = 0.0;
      double ad = 0.0, as = 0.0;
      for (Eigen::Index j = 0; j < eig_.size(); ++j) {
        const Complex e = std::exp(eig_(j) * z);
        const Complex td = coef_density_(j) * e;
        const Complex ts = coef_survival_(j) * e;
        d += td;
        s += ts;
        ad += std::abs(td);
        as += std::abs(ts);
      }
      if (d.real() > 0.0 && s.real() > 0.0 && ad <= 1e3 * d.real() && as <= 1e3 * s.real())
        return {d.real(), s.real()};
    }
    const RowVector a = pi_.transpose() * linalg::mexp(T_ * z);
    return {a.dot(t_), a.sum()};
  }

  /// Logarithms of the same two quantities, exact past the underflow limit.
  PHValues log_values(double z) const {
    const PHValues v = (*this)(z);
    if (v.density >= survival_underflow_limit && v.survival >= survival_underflow_limit)
      return {std::log(v.density), std::log(v.survival)};
    const auto scaled = linalg::mexp_scaled(T_ * z);
    const RowVector b = pi_.transpose() * scaled.matrix;
    const double ninf = -std::numeric_limits<double>::infinity();
    const double d = b.dot(t_), s = b.sum();
    return {d > 0.0 ? std::log(d) + scaled.log_scale : ninf,
            s > 0.0 ? std::log(s) + scaled.log_scale : ninf};
  }

  bool spectral() const { return spectral_; }

 private:
  Vector pi_;
  Matrix T_;
  Vector t_;
  bool spectral_ = false;
  ComplexVector eig_;
  ComplexVector coef_density_;
  ComplexVector coef_survival_;
};

// ---------------------------------------------------------------------------
// Simulation

/// Absorption time of the jump process (pi, T), by simulating the embedded
/// chain with exponential holding times.
template <class URBG>
double sample_absorption_time(const PHRepresentation& rep, URBG& gen) {
  const auto p = rep.order();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto pick = [&](auto&& weight, Eigen::Index count, double total) {
    double u = unif(gen) * total;
    for (Eigen::Index k = 0; k < count; ++k) {
      u -= weight(k);
      if (u < 0.0) return k;
    }
    // rounding: fall back to the last entry with positive weight
    for (Eigen::Index k = count - 1; k >= 0; --k)
      if (weight(k) > 0.0) return k;
    return count - 1;
  };
  Eigen::Index state = pick([&](Eigen::Index k) { return rep.pi()(k); }, p, 1.0);
  double time = 0.0;
  while (true) {
    const double rate = -rep.T()(state, state);
    time += std::exponential_distribution<double>(rate)(gen);
    // next: transient l != state with weight T(state, l); index p is absorption
    const Eigen::Index next = pick(
        [&](Eigen::Index l) {
          if (l == p) return rep.exit_rates()(state);
          return l == state ? 0.0 : rep.T()(state, l);
        },
        p + 1, rate);
    if (next == p) return time;
    state = next;
  }
}

template <class URBG>
double sample_one(const IPHModel& model, URBG& gen) {
  return model.inhom.inverse(sample_absorption_time(model.rep, gen));
}

inline std::vector<double> sample(const IPHModel& model, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InputError("sample: n must be at least one");
  std::mt19937_64 gen(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = sample_one(model, gen);
  return out;
}

// ---------------------------------------------------------------------------
// Moments, Green matrix, residual lifetimes

/// Expected occupation times U = int_0^inf exp(T g^{-1}(s)) ds.
inline Matrix green_matrix(const IPHModel& model) {
  if (model.inhom.shift() != 0.0)
    throw NotImplementedError("green_matrix: shifted intensities are not supported");
  const Matrix& T = model.rep.T();
  switch (model.inhom.family()) {
    case Family::identity:
      return linalg::matrix_function(-T, linalg::ScalarFunction::inverse());
    case Family::gompertz: {
      // beta^{-1} e^{-T/beta} E1(-T/beta), evaluated as the single function
      // w -> e^w E1(w) so that neither factor overflows
      const double beta = model.inhom.parameter();
      return linalg::matrix_function(-T / beta, linalg::ScalarFunction::exp_e1()) / beta;
    }
    case Family::weibull:
      break;
  }
  throw NotImplementedError("green_matrix: only identity and gompertz intensities");
}

inline double mean(const IPHModel& model) {
  if (model.inhom.shift() != 0.0)
    throw NotImplementedError("mean: shifted intensities are not supported");
  const Matrix& T = model.rep.T();
  const Vector ones = Vector::Ones(model.rep.order());
  switch (model.inhom.family()) {
    case Family::identity:
    case Family::gompertz:
      return model.rep.pi().dot(green_matrix(model) * ones);
    case Family::weibull: {
      const double theta = model.inhom.parameter();
      const Matrix P = linalg::matrix_function(-T, linalg::ScalarFunction::power(-1.0 / theta));
      return std::tgamma(1.0 + 1.0 / theta) * model.rep.pi().dot(P * ones);
    }
  }
  throw NotImplementedError("mean: unsupported family");
}

/// Law of Y - x given Y > x: IPH with initial vector pi e^{T g^{-1}(x)}
/// normalised, the same T, and intensity lambda(x + .).
inline IPHModel residual_lifetime(const IPHModel& model, double x) {
  if (!(x >= 0.0)) throw InputError("residual_lifetime: x must be non-negative");
  if (x == 0.0) return model;
  const double z = model.inhom.integrated(x);
  if (!std::isfinite(z)) throw DomainError("residual_lifetime: survival is zero");
  const RowVector a = model.rep.pi().transpose() * linalg::mexp(model.rep.T() * z);
  const double s = a.sum();
  if (!(s >= survival_underflow_limit)) throw DomainError("residual_lifetime: survival is zero");
  Vector alpha = (a / s).transpose();
  alpha = alpha.cwiseMax(0.0);
  alpha /= alpha.sum();
  return IPHModel{PHRepresentation(alpha, model.rep.T()), model.inhom.shifted(x)};
}

// ---------------------------------------------------------------------------
// Coxian structures

/// Coxian chain 1 -> 2 -> ... -> p with rates lambda_k; from state k the
/// chain continues with probability nu_k and is absorbed otherwise.
/// Generalized Coxian chains may start in any state.
struct CoxianSpec {
  std::vector<double> rates;         // lambda_1..lambda_p > 0
  std::vector<double> continuation;  // nu_1..nu_{p-1} in [0, 1]
  bool generalized = false;
  Vector initial;  // used only when generalized

  void validate() const {
    if (rates.empty()) throw InputError("Coxian: no phases");
    if (continuation.size() + 1 != rates.size())
      throw InputError("Coxian: need p-1 continuation probabilities");
    for (double r : rates)
      if (!(r > 0.0) || !std::isfinite(r)) throw InputError("Coxian: rates must be positive");
    for (double v : continuation)
      if (!(v >= 0.0 && v <= 1.0)) throw InputError("Coxian: continuation outside [0, 1]");
    if (generalized && initial.size() != static_cast<Eigen::Index>(rates.size()))
      throw InputError("Coxian: generalized form needs an initial vector of length p");
  }

  Vector initial_vector() const {
    if (generalized) return initial;
    Vector e = Vector::Zero(static_cast<Eigen::Index>(rates.size()));
    e(0) = 1.0;
    return e;
  }

  PHRepresentation to_representation() const {
    validate();
    const auto p = static_cast<Eigen::Index>(rates.size());
    Matrix T = Matrix::Zero(p, p);
    for (Eigen::Index k = 0; k < p; ++k) {
      T(k, k) = -rates[k];
      if (k + 1 < p) T(k, k + 1) = continuation[k] * rates[k];
    }
    return PHRepresentation(initial_vector(), T);
  }
};

/// Closed-form density: for a chain started in state j,
///   sum_{k>=j} lambda_k (1-nu_k) prod_{m=j}^{k-1} lambda_m nu_m
///              * sum_{m=j}^{k} e^{-lambda_m x} / prod_{n!=m} (lambda_n - lambda_m),
/// with nu_p = 0, mixed over the initial vector.
inline double coxian_density(const CoxianSpec& spec, double x) {
  spec.validate();
  if (!(x >= 0.0)) throw InputError("coxian_density: x must be non-negative");
  const auto& lam = spec.rates;
  const std::size_t p = lam.size();
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = a + 1; b < p; ++b)
      if (std::abs(lam[a] - lam[b]) <= 1e-12 * std::max(lam[a], lam[b]))
        throw DegenerateError("coxian_density: rates must be pairwise distinct");
  auto nu = [&](std::size_t k) { return k + 1 < p ? spec.continuation[k] : 0.0; };

  const Vector init = spec.initial_vector();
  double total = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    if (init(static_cast<Eigen::Index>(j)) == 0.0) continue;
    double from_j = 0.0;
    double reach = 1.0;  // prod_{m=j}^{k-1} lambda_m nu_m
    for (std::size_t k = j; k < p; ++k) {
      const double lead = lam[k] * (1.0 - nu(k)) * reach;
      if (lead != 0.0) {
        double inner = 0.0;
        for (std::size_t m = j; m <= k; ++m) {
          double denom = 1.0;
          for (std::size_t n = j; n <= k; ++n)
            if (n != m) denom *= lam[n] - lam[m];
          inner += std::exp(-lam[m] * x) / denom;
        }
        from_j += lead * inner;
      }
      reach *= lam[k] * nu(k);
    }
    total += init(static_cast<Eigen::Index>(j)) * from_j;
  }
  return total;
}

}  // namespace iph
