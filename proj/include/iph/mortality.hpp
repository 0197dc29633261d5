#pragma once

// Life tables in the Human Mortality Database 1x1 layout, the implied-density
// sample used for EM, direct fitting of log-mortality curves and the
// Lee-Carter baseline. Ages are modelled on the scale age / 100.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "iph/em.hpp"
#include "iph/errors.hpp"
#include "iph/optimize.hpp"
#include "iph/phase_type.hpp"
#include "iph/regression.hpp"

namespace iph::mortality {

inline constexpr double age_scale = 100.0;

// ---------------------------------------------------------------------------
// HMD text files

/// One parsed HMD 1x1 file: a value per (year, age, column); "." is NaN.
struct HmdFile {
  std::vector<std::string> columns;  // e.g. Female, Male, Total
  struct Row {
    int year;
    int age;
    std::vector<double> values;
    std::size_t line;
  };
  std::vector<Row> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t j = 0; j < columns.size(); ++j)
      if (columns[j] == name) return j;
    throw InputError("HMD file has no column '" + name + "'");
  }
};

namespace detail {

inline int parse_int_token(const std::string& tok, std::size_t line, const char* what, bool allow_plus) {
  std::string s = tok;
  if (allow_plus && !s.empty() && s.back() == '+') s.pop_back();
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw ParseError(std::string("bad ") + what + " '" + tok + "'", line);
  return std::stoi(s);
}

}  // namespace detail

inline HmdFile parse_hmd(std::istream& in) {
  HmdFile file;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  bool any_content = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    any_content = true;
    if (!header_seen) {
      if (tok[0] == "Year") {
        if (tok.size() < 3 || tok[1] != "Age") throw ParseError("header must read 'Year Age ...'", lineno);
        file.columns.assign(tok.begin() + 2, tok.end());
        header_seen = true;
      }
      continue;  // title lines
    }
    if (tok.size() != file.columns.size() + 2)
      throw ParseError("expected " + std::to_string(file.columns.size() + 2) + " fields, found " +
                           std::to_string(tok.size()),
                       lineno);
    HmdFile::Row row{detail::parse_int_token(tok[0], lineno, "year", false),
                     detail::parse_int_token(tok[1], lineno, "age", true),
                     {},
                     lineno};
    for (std::size_t j = 2; j < tok.size(); ++j) {
      if (tok[j] == ".") {
        row.values.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      std::size_t used = 0;
      double v;
      try {
        v = std::stod(tok[j], &used);
      } catch (const std::exception&) {
        throw ParseError("bad value '" + tok[j] + "'", lineno);
      }
      if (used != tok[j].size() || !std::isfinite(v) || v < 0.0)
        throw ParseError("bad value '" + tok[j] + "'", lineno);
      row.values.push_back(v);
    }
    file.rows.push_back(std::move(row));
  }
  if (!any_content || (header_seen && file.rows.empty())) throw InputError("life table is empty");
  if (!header_seen) throw ParseError("no 'Year Age ...' header found", lineno);
  return file;
}

inline HmdFile parse_hmd_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return parse_hmd(in);
}

// ---------------------------------------------------------------------------
// Life tables

struct LifeTableRow {
  int year;
  int age;
  double deaths;    // NaN when loaded from rates only
  double exposure;  // NaN when loaded from rates only
  double mx;
};

struct LifeTable {
  std::vector<LifeTableRow> rows;
  /// Rows dropped because of a "." entry or non-positive exposure.
  std::size_t dropped = 0;

  bool has_counts() const { return !rows.empty() && !std::isnan(rows.front().deaths); }
  int max_age() const {
    int a = 0;
    for (const auto& r : rows) a = std::max(a, r.age);
    return a;
  }
  std::pair<int, int> year_range() const {
    int lo = std::numeric_limits<int>::max(), hi = std::numeric_limits<int>::min();
    for (const auto& r : rows) lo = std::min(lo, r.year), hi = std::max(hi, r.year);
    return {lo, hi};
  }
};

/// Table of central death rates from a single rates file (Mx_1x1 layout).
inline LifeTable load_table(std::istream& in, const std::string& column = "Female") {
  const HmdFile f = parse_hmd(in);
  const auto j = f.column(column);
  LifeTable t;
  for (const auto& r : f.rows) {
    const double m = r.values[j];
    if (std::isnan(m)) {
      ++t.dropped;
      continue;
    }
    t.rows.push_back({r.year, r.age, std::numeric_limits<double>::quiet_NaN(),
                      std::numeric_limits<double>::quiet_NaN(), m});
  }
  if (t.rows.empty()) throw InputError("life table is empty");
  return t;
}

/// Table with counts from matching Deaths_1x1 and Exposures_1x1 files.
inline LifeTable load_table(std::istream& deaths, std::istream& exposures, const std::string& column = "Female") {
  const HmdFile d = parse_hmd(deaths);
  const HmdFile e = parse_hmd(exposures);
  const auto jd = d.column(column);
  const auto je = e.column(column);
  std::map<std::pair<int, int>, double> expo;
  for (const auto& r : e.rows) expo[{r.year, r.age}] = r.values[je];
  LifeTable t;
  for (const auto& r : d.rows) {
    const auto it = expo.find({r.year, r.age});
    if (it == expo.end())
      throw ParseError("no exposure for year " + std::to_string(r.year) + ", age " + std::to_string(r.age), r.line);
    const double D = r.values[jd];
    const double E = it->second;
    if (std::isnan(D) || std::isnan(E) || !(E > 0.0)) {
      ++t.dropped;
      continue;
    }
    t.rows.push_back({r.year, r.age, D, E, D / E});
  }
  if (t.rows.empty()) throw InputError("life table is empty");
  return t;
}

inline LifeTable load_table_files(const std::string& deaths_path, const std::string& exposures_path,
                                  const std::string& column = "Female") {
  std::ifstream d(deaths_path), e(exposures_path);
  if (!d) throw InputError("cannot open '" + deaths_path + "'");
  if (!e) throw InputError("cannot open '" + exposures_path + "'");
  return load_table(d, e, column);
}

inline LifeTable load_rates_file(const std::string& path, const std::string& column = "Female") {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return load_table(in, column);
}

/// Aggregated rate per age over [year_lo, year_hi]: sum D / sum E with
/// counts, the mean of m_x otherwise. Ages without data are absent.
inline std::map<int, double> aggregated_rates(const LifeTable& table, int year_lo, int year_hi) {
  if (year_lo > year_hi) throw InputError("year range is empty");
  std::map<int, std::pair<double, double>> acc;
  const bool counts = table.has_counts();
  for (const auto& r : table.rows) {
    if (r.year < year_lo || r.year > year_hi) continue;
    auto& a = acc[r.age];
    if (counts) {
      a.first += r.deaths;
      a.second += r.exposure;
    } else {
      a.first += r.mx;
      a.second += 1.0;
    }
  }
  if (acc.empty()) throw InputError("no life-table rows in the requested years");
  std::map<int, double> out;
  for (const auto& [age, a] : acc) out[age] = a.first / a.second;
  return out;
}

// ---------------------------------------------------------------------------
// Implied-density sample

struct AgeObservation {
  int age;
  SurvObservation obs;  // y = (age + 0.5) / 100, delta = 1
};

namespace detail {

// Probability of dying in [a, a+1) under piecewise-constant rates; the last
// age group is open, so it receives all remaining mass.
inline std::vector<AgeObservation> implied_from_rates(const std::map<int, double>& rates) {
  std::vector<AgeObservation> out;
  double log_survival = 0.0;
  double total = 0.0;
  const int last = rates.rbegin()->first;
  for (const auto& [age, m] : rates) {
    const double s = std::exp(log_survival);
    const double mass = age == last ? s : s * -std::expm1(-m);
    out.push_back({age, {(age + 0.5) / age_scale, 1, mass}});
    total += mass;
    log_survival -= m;
  }
  if (!(total > 0.0) || !std::isfinite(total)) throw DegenerateError("implied sample: no deaths in the selected years");
  for (auto& o : out) o.obs.weight /= total;
  return out;
}

}  // namespace detail

/// One exact observation per age at the midpoint (age + 0.5) / 100, weighted
/// by the probability of death in that age implied by the aggregated rates.
/// Weights sum to one.
inline std::vector<AgeObservation> implied_sample(const LifeTable& table, int year_lo, int year_hi) {
  const auto rates = aggregated_rates(table, year_lo, year_hi);
  const int first = rates.begin()->first;
  int expected = first;
  for (const auto& [age, m] : rates) {
    if (age != expected) throw InputError("life table ages are not contiguous at age " + std::to_string(expected));
    ++expected;
  }
  bool any_death = false;
  for (const auto& [age, m] : rates) any_death = any_death || m > 0.0;
  if (!any_death) throw DegenerateError("implied sample: no deaths in the selected years");
  return detail::implied_from_rates(rates);
}

inline std::vector<SurvObservation> observations(const std::vector<AgeObservation>& s) {
  std::vector<SurvObservation> out;
  for (const auto& a : s) out.push_back(a.obs);
  return out;
}

/// Implied samples for several years with the (scaled) year as covariate;
/// each year carries total weight 1 / (number of years).
inline std::vector<RegObservation> implied_sample_by_year(const LifeTable& table, const std::vector<int>& years,
                                                          int reference_year, double year_scale) {
  if (years.empty()) throw InputError("no years selected");
  std::vector<RegObservation> out;
  for (int y : years) {
    for (const auto& a : implied_sample(table, y, y)) {
      Vector x(1);
      x(0) = (y - reference_year) / year_scale;
      out.push_back({a.obs.z, 1, a.obs.weight / static_cast<double>(years.size()), x});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Curves

struct MortalityCurve {
  std::vector<int> ages;
  std::vector<double> log_mortality;  // per year
  /// Ages left out because no deaths were recorded.
  std::size_t excluded_zero = 0;
};

/// log of the aggregated rates per age; zero-rate ages are excluded.
inline MortalityCurve observed_curve(const LifeTable& table, int year_lo, int year_hi) {
  MortalityCurve c;
  for (const auto& [age, m] : aggregated_rates(table, year_lo, year_hi)) {
    if (!(m > 0.0)) {
      ++c.excluded_zero;
      continue;
    }
    c.ages.push_back(age);
    c.log_mortality.push_back(std::log(m));
  }
  return c;
}

/// Implied sample from a curve of log-rates on contiguous ages.
inline std::vector<AgeObservation> implied_sample(const MortalityCurve& curve) {
  if (curve.ages.empty()) throw InputError("implied sample: empty curve");
  std::map<int, double> rates;
  for (std::size_t i = 0; i < curve.ages.size(); ++i) {
    if (i && curve.ages[i] != curve.ages[i - 1] + 1)
      throw InputError("implied sample: curve ages are not contiguous at age " + std::to_string(curve.ages[i]));
    rates[curve.ages[i]] = std::exp(curve.log_mortality[i]);
  }
  return detail::implied_from_rates(rates);
}

/// Log hazard on the model scale: log lambda(u) + log(pi e^{Tz} t) - log(pi e^{Tz} e),
/// z = g^{-1}(u). The last two terms form the log correction factor.
inline double log_hazard(const IPHModel& model, const PhaseTypeKernel& kernel, double u) {
  const double z = model.inhom.integrated(u);
  const double log_lambda = std::log(model.inhom.intensity(u));
  if (!std::isfinite(z)) return log_lambda + std::log(tail_params(model.rep.T()).eta);
  const PHValues lv = kernel.log_values(z);
  return log_lambda + lv.density - lv.survival;
}

/// Log correction factor log C(u): the log hazard of the underlying PH at g^{-1}(u).
inline double log_correction(const IPHModel& model, double u) {
  const PhaseTypeKernel kernel(model.rep);
  const PHValues lv = kernel.log_values(model.inhom.integrated(u));
  return lv.density - lv.survival;
}

/// Model log-mortality per year of age.
inline double model_log_mortality(const IPHModel& model, double age) {
  if (!(age >= 0.0)) throw InputError("model_log_mortality: age must be non-negative");
  const PhaseTypeKernel kernel(model.rep);
  return log_hazard(model, kernel, age / age_scale) - std::log(age_scale);
}

inline double model_log_mortality(const PIModel& model, double age, const Vector& x) {
  return model_log_mortality(model.conditional(x), age);
}

/// Squared log-mortality loss over the curve's ages.
inline double log_mortality_loss(const IPHModel& model, const MortalityCurve& curve) {
  const PhaseTypeKernel kernel(model.rep);
  double loss = 0.0;
  for (std::size_t i = 0; i < curve.ages.size(); ++i) {
    const double r =
        log_hazard(model, kernel, curve.ages[i] / age_scale) - std::log(age_scale) - curve.log_mortality[i];
    loss += r * r;
  }
  return std::isnan(loss) ? std::numeric_limits<double>::infinity() : loss;
}

struct CurveWithCovariates {
  MortalityCurve curve;
  Vector x;
};

inline double log_mortality_loss(const PIModel& model, const std::vector<CurveWithCovariates>& curves) {
  double loss = 0.0;
  for (const auto& c : curves) {
    try {
      loss += log_mortality_loss(model.conditional(c.x), c.curve);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  }
  return loss;
}

/// Weighted log-likelihood of an IPH model on an (implied) sample.
inline double sample_loglik(const IPHModel& model, const std::vector<SurvObservation>& sample) {
  const PhaseTypeKernel kernel(model.rep);
  double ll = 0.0;
  for (const auto& o : sample) {
    if (o.weight == 0.0) continue;
    const double z = model.inhom.integrated(o.z);
    const PHValues lv = kernel.log_values(z);
    ll += o.weight * (o.delta ? std::log(model.inhom.intensity(o.z)) + lv.density : lv.survival);
  }
  return ll;
}

// ---------------------------------------------------------------------------
// Direct fitting

/// Unconstrained coordinates for (pi, T, beta) that keep the zero pattern of
/// a starting model: softmax over the non-zero entries of pi, logs of the
/// non-zero off-diagonal and exit rates, log of the family parameter.
class Reparameterization {
 public:
  explicit Reparameterization(const IPHModel& init) : family_(init.inhom.family()) {
    const auto& rep = init.rep;
    p_ = rep.order();
    for (Eigen::Index k = 0; k < p_; ++k)
      if (rep.pi()(k) > 0.0) pi_support_.push_back(k);
    for (Eigen::Index k = 0; k < p_; ++k)
      for (Eigen::Index l = 0; l < p_; ++l)
        if (k != l && rep.T()(k, l) > 0.0) jumps_.push_back({k, l});
    for (Eigen::Index k = 0; k < p_; ++k)
      if (rep.exit_rates()(k) > 0.0) exits_.push_back(k);
  }

  Eigen::Index size() const {
    const auto free_pi = pi_support_.empty() ? 0 : static_cast<Eigen::Index>(pi_support_.size()) - 1;
    return free_pi + static_cast<Eigen::Index>(jumps_.size() + exits_.size()) +
           (family_ == Family::identity ? 0 : 1);
  }

  Vector encode(const IPHModel& m) const {
    Vector v(size());
    Eigen::Index i = 0;
    const double ref = std::log(m.rep.pi()(pi_support_.front()));
    for (std::size_t j = 1; j < pi_support_.size(); ++j) v(i++) = std::log(m.rep.pi()(pi_support_[j])) - ref;
    for (const auto& [k, l] : jumps_) v(i++) = std::log(m.rep.T()(k, l));
    for (auto k : exits_) v(i++) = std::log(m.rep.exit_rates()(k));
    if (family_ != Family::identity) v(i++) = std::log(m.inhom.parameter());
    return v;
  }

  /// Throws InputError if the coordinates leave the representable range.
  IPHModel decode(const Vector& v) const {
    Vector pi = Vector::Zero(p_);
    Eigen::Index i = 0;
    double mx = 0.0;
    for (std::size_t j = 1; j < pi_support_.size(); ++j) mx = std::max(mx, v(i + static_cast<Eigen::Index>(j) - 1));
    pi(pi_support_.front()) = std::exp(-mx);
    for (std::size_t j = 1; j < pi_support_.size(); ++j) pi(pi_support_[j]) = std::exp(v(i++) - mx);
    pi /= pi.sum();
    Matrix T = Matrix::Zero(p_, p_);
    for (const auto& [k, l] : jumps_) T(k, l) = std::exp(v(i++));
    Vector exit = Vector::Zero(p_);
    for (auto k : exits_) exit(k) = std::exp(v(i++));
    for (Eigen::Index k = 0; k < p_; ++k) T(k, k) = -(T.row(k).sum() + exit(k));
    if (!T.allFinite() || !pi.allFinite()) throw InputError("reparameterization: out of range");
    const double param = family_ == Family::identity ? 1.0 : std::exp(v(i++));
    return {PHRepresentation(pi, T), Inhomogeneity::of(family_, param)};
  }

 private:
  Family family_;
  Eigen::Index p_ = 0;
  std::vector<Eigen::Index> pi_support_;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> jumps_;
  std::vector<Eigen::Index> exits_;
};

struct DirectFitConfig {
  NelderMeadOptions optimizer{0.1, 4000, 1e-14, 1e-10, true};
  int restarts = 10;
};

template <class Model>
struct DirectFitResult {
  Model model;
  double initial_loss = 0.0;
  double loss = 0.0;
  /// Best loss after every optimizer iteration (non-increasing).
  std::vector<double> loss_trace;
  int evaluations = 0;
};

/// Minimises the squared log-mortality loss from a starting model.
inline DirectFitResult<IPHModel> direct_fit(const IPHModel& init, const MortalityCurve& curve,
                                            const DirectFitConfig& config = {}) {
  if (curve.ages.empty()) throw InputError("direct_fit: empty curve");
  if (init.inhom.shift() != 0.0) throw InputError("direct_fit: shifted intensity not supported");
  const Reparameterization param(init);
  auto objective = [&](const Vector& v) {
    try {
      return log_mortality_loss(param.decode(v), curve);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const Vector x0 = param.encode(init);
  const double f0 = log_mortality_loss(init, curve);
  if (!std::isfinite(f0)) throw InputError("direct_fit: loss is not finite at the initial model");
  const auto nm = nelder_mead_restarts(objective, x0, config.optimizer, config.restarts);
  DirectFitResult<IPHModel> out{init, f0, f0, nm.best_trace, nm.evaluations};
  if (nm.value < f0) {
    out.model = param.decode(nm.x);
    out.loss = nm.value;
  }
  return out;
}

/// Direct fit of a proportional-intensities mortality model to several
/// curves, each with its covariate row (for instance the scaled year).
inline DirectFitResult<PIModel> direct_fit(const PIModel& init, const std::vector<CurveWithCovariates>& curves,
                                           const DirectFitConfig& config = {}) {
  init.validate();
  if (curves.empty()) throw InputError("direct_fit: no curves");
  const IPHModel base{init.rep, Inhomogeneity::of(init.family, init.family == Family::identity
                                                                      ? 1.0
                                                                      : std::exp(init.gamma(0)))};
  const Reparameterization param(base);
  const auto nb = init.beta.size();
  const auto ng_extra = init.gamma.size() > 1 ? init.gamma.size() - 1 : 0;
  auto decode = [&](const Vector& v) {
    const IPHModel m = param.decode(v.head(param.size()));
    PIModel out = init;
    out.rep = m.rep;
    out.beta = v.segment(param.size(), nb);
    if (init.family != Family::identity) {
      out.gamma(0) = std::log(m.inhom.parameter());
      if (ng_extra) out.gamma.tail(ng_extra) = v.tail(ng_extra);
    }
    return out;
  };
  Vector x0(param.size() + nb + ng_extra);
  x0 << param.encode(base), init.beta, (ng_extra ? Vector(init.gamma.tail(ng_extra)) : Vector());
  auto objective = [&](const Vector& v) {
    try {
      return log_mortality_loss(decode(v), curves);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const double f0 = log_mortality_loss(init, curves);
  if (!std::isfinite(f0)) throw InputError("direct_fit: loss is not finite at the initial model");
  const auto nm = nelder_mead_restarts(objective, x0, config.optimizer, config.restarts);
  DirectFitResult<PIModel> out{init, f0, f0, nm.best_trace, nm.evaluations};
  if (nm.value < f0) {
    out.model = decode(nm.x);
    out.loss = nm.value;
  }
  return out;
}

/// EM fit of a matrix-Gompertz (or other family) model to an implied sample:
/// the no-covariate case of the proportional-intensities alternation.
inline IPHModel em_fit(const std::vector<SurvObservation>& sample, const StructureSpec& structure, Family family,
                       const PIConfig& config, double initial_parameter = 1.0) {
  std::vector<RegObservation> data;
  data.reserve(sample.size());
  for (const auto& o : sample) data.push_back({o.z, o.delta, o.weight, Vector()});
  const PIFit fit = fit_pi(data, {structure, family, false, initial_parameter}, config);
  const double param = family == Family::identity ? 1.0 : std::exp(fit.model.gamma(0));
  return {fit.model.rep, Inhomogeneity::of(family, param)};
}

/// Multi-start variant: one EM fit per starting parameter, keeping the one
/// with the highest weighted log-likelihood.
inline IPHModel em_fit(const std::vector<SurvObservation>& sample, const StructureSpec& structure, Family family,
                       const PIConfig& config, const std::vector<double>& initial_parameters) {
  if (initial_parameters.empty()) throw InputError("em_fit: no starting parameters");
  std::optional<IPHModel> best;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (double start : initial_parameters) {
    IPHModel m = em_fit(sample, structure, family, config, start);
    const double ll = sample_loglik(m, sample);
    if (!best || ll > best_ll) {
      best = std::move(m);
      best_ll = ll;
    }
  }
  return *best;
}

/// Least-squares slope of log-mortality against age / 100 over ages at or
/// above `from_age`. A matrix-Gompertz curve has high-age slope tending to
/// beta, so this is a natural starting value for it.
inline double senescent_slope(const MortalityCurve& curve, int from_age = 50) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (std::size_t i = 0; i < curve.ages.size(); ++i) {
    if (curve.ages[i] < from_age) continue;
    const double u = curve.ages[i] / age_scale, y = curve.log_mortality[i];
    sx += u, sy += y, sxx += u * u, sxy += u * y, n += 1;
  }
  const double den = n * sxx - sx * sx;
  if (n < 2 || !(den > 0.0)) throw InputError("senescent_slope: fewer than two ages in range");
  return (n * sxy - sx * sy) / den;
}

/// Fits orders 1, 2, ... via `fit_order(p)` (returning the loss) and stops at
/// the first order whose relative loss improvement is below `threshold`.
/// Returns the selected order and all losses computed.
inline std::pair<int, std::vector<double>> select_order(const std::function<double(int)>& fit_order, int p_max,
                                                        double threshold = 1e-3) {
  std::vector<double> losses;
  int chosen = 1;
  for (int p = 1; p <= p_max; ++p) {
    losses.push_back(fit_order(p));
    if (p > 1) {
      const double prev = losses[losses.size() - 2];
      const double gain = (prev - losses.back()) / std::max(std::abs(prev), 1e-300);
      if (gain < threshold) break;
    }
    chosen = p;
  }
  return {chosen, losses};
}

// ---------------------------------------------------------------------------
// Lee-Carter

struct LeeCarter {
  Vector a;  // per age
  Vector b;  // per age, sums to one
  Vector k;  // per year, sums to zero
  Matrix fitted() const { return a.replicate(1, k.size()) + b * k.transpose(); }
};

/// log m_{x,t} = a_x + b_x k_t from the leading singular triplet of the
/// row-centred matrix (rows are ages, columns years).
inline LeeCarter lee_carter_fit(const Matrix& log_m) {
  if (log_m.rows() < 1 || log_m.cols() < 1) throw InputError("lee_carter_fit: empty matrix");
  if (!log_m.allFinite()) throw InputError("lee_carter_fit: matrix has non-finite entries");
  LeeCarter lc;
  lc.a = log_m.rowwise().mean();
  const Matrix centred = log_m.colwise() - lc.a;
  Eigen::JacobiSVD<Matrix> svd(centred, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double s1 = svd.singularValues()(0);
  const Vector u = svd.matrixU().col(0);
  const Vector v = svd.matrixV().col(0);
  const double su = u.sum();
  if (!(s1 > 0.0) || std::abs(su) < 1e-12) {
    lc.b = Vector::Constant(log_m.rows(), 1.0 / static_cast<double>(log_m.rows()));
    lc.k = Vector::Zero(log_m.cols());
    if (s1 > 0.0) lc.k = centred.colwise().sum().transpose();
  } else {
    lc.b = u / su;
    lc.k = s1 * su * v;
  }
  const double kbar = lc.k.mean();
  lc.k.array() -= kbar;
  lc.a += lc.b * kbar;
  return lc;
}

/// Age-by-year log-rate matrix for a rectangular block of the table.
inline Matrix log_rate_matrix(const LifeTable& table, int age_lo, int age_hi, int year_lo, int year_hi) {
  if (age_lo > age_hi || year_lo > year_hi) throw InputError("log_rate_matrix: empty block");
  Matrix M = Matrix::Constant(age_hi - age_lo + 1, year_hi - year_lo + 1, std::numeric_limits<double>::quiet_NaN());
  for (const auto& r : table.rows)
    if (r.age >= age_lo && r.age <= age_hi && r.year >= year_lo && r.year <= year_hi)
      M(r.age - age_lo, r.year - year_lo) = std::log(r.mx);
  if (!M.allFinite()) throw InputError("log_rate_matrix: block has missing or zero rates");
  return M;
}

// ---------------------------------------------------------------------------
// Export

/// age, observed_log_mx, fitted_log_mx, model_id
inline void write_curve_csv(std::ostream& os, const MortalityCurve& curve, const IPHModel& model,
                            const std::string& model_id, bool header = true) {
  if (header) os << "age,observed_log_mx,fitted_log_mx,model_id\n";
  os << std::setprecision(17);
  const PhaseTypeKernel kernel(model.rep);
  for (std::size_t i = 0; i < curve.ages.size(); ++i) {
    const double fitted = log_hazard(model, kernel, curve.ages[i] / age_scale) - std::log(age_scale);
    os << curve.ages[i] << ',' << curve.log_mortality[i] << ',' << fitted << ',' << model_id << '\n';
  }
}

}  // namespace iph::mortality
