// iphfit: command-line front end for the iph library.
//
//   iphfit fit-ph        data.csv --p 3 --structure coxian --seed 7 --out dir
//   iphfit fit-pi        data.csv --p 2 --family weibull --theta-regression --seed 1 --out dir
//   iphfit fit-mortality --deaths D --exposures E --years 2000:2019 --p 3 --seed 1 --out dir
//   iphfit simulate      --study sec6 --seed 1 --out study.csv
//   iphfit diagnose      data.csv --model dir/model.json --out dir
//   iphfit lee-carter    --deaths D --exposures E --ages 0:99 --years 1950:2000 --out dir
//
// Exit codes: 0 success, 2 input error, 3 numerical or fit error.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "iph/iph.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::json;
using namespace iph;

namespace {

struct Range {
  int lo = 0;
  int hi = 0;
};

Range parse_range(const std::string& s, const char* what) {
  const auto colon = s.find(':');
  try {
    std::size_t used = 0;
    if (colon == std::string::npos) {
      const int v = std::stoi(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return {v, v};
    }
    const std::string a = s.substr(0, colon), b = s.substr(colon + 1);
    Range r{std::stoi(a, &used), 0};
    if (used != a.size()) throw std::invalid_argument(s);
    r.hi = std::stoi(b, &used);
    if (used != b.size() || r.hi < r.lo) throw std::invalid_argument(s);
    return r;
  } catch (const std::exception&) {
    throw InputError(std::string("--") + what + " must look like A:B with A <= B, got '" + s + "'");
  }
}

fs::path output_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw InputError("cannot create output directory '" + dir + "'");
  return p;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw InputError("cannot write '" + p.string() + "'");
  return os;
}

void write_json(const fs::path& p, const Json& j) { open_out(p) << j.dump(2) << '\n'; }

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

std::uint64_t require_seed(const std::optional<std::uint64_t>& seed, const char* command) {
  if (!seed) throw InputError(std::string(command) + " needs --seed");
  return *seed;
}

void write_residuals(const fs::path& p, const std::vector<diagnostics::TimeStatus>& r) {
  auto os = open_out(p);
  os << "residual,status\n" << std::setprecision(17);
  for (const auto& x : r) os << x.time << ',' << x.delta << '\n';
}

Json fit_summary(double loglik, int n_params, std::size_t n_obs, int iterations, bool converged) {
  const auto ic = diagnostics::information_criteria(loglik, n_params, n_obs);
  return {{"loglik", loglik},       {"n_params", n_params},   {"n_obs", n_obs}, {"aic", ic.aic},
          {"bic", ic.bic},          {"iterations", iterations}, {"converged", converged},
          {"caveat", diagnostics::InformationCriteria::caveat}};
}

// ---------------------------------------------------------------------------

struct ModelOptions {
  int p = 1;
  std::string structure = "general";
  std::string family;
  std::optional<std::uint64_t> seed;
  int max_iterations = 2000;
  double tolerance = 1e-4;
  int threads = 1;
  std::string out = ".";

  void add_to(CLI::App* app, const std::string& default_family) {
    family = default_family;
    app->add_option("--p", p, "Number of phases")->check(CLI::PositiveNumber);
    app->add_option("--structure", structure, "general | coxian | generalized_coxian");
    app->add_option("--family", family, "identity | weibull | gompertz");
    app->add_option("--seed", seed, "Seed of the random initial representation");
    app->add_option("--max-iter", max_iterations, "Iteration budget")->check(CLI::PositiveNumber);
    app->add_option("--tol", tolerance, "Relative log-likelihood tolerance")->check(CLI::PositiveNumber);
    app->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    app->add_option("--out", out, "Output directory");
  }

  StructureSpec spec() const {
    StructureSpec s{structure_from_string(structure), p};
    s.validate();
    return s;
  }
};

struct FitPhOptions : ModelOptions {
  std::string data;
  double initial_parameter = 1.0;
};

int cmd_fit_ph(const FitPhOptions& o) {
  const auto table = csv::read_survival(o.data);
  const StructureSpec spec = o.spec();
  const Family family = family_from_string(o.family);
  const std::uint64_t seed = require_seed(o.seed, "fit-ph");
  const fs::path dir = output_dir(o.out);
  std::vector<RegObservation> rows = table.rows;
  for (auto& r : rows) r.x.resize(0);

  Json model;
  std::vector<double> trace;
  std::vector<diagnostics::TimeStatus> residuals;
  if (family == Family::identity) {
    std::vector<SurvObservation> data;
    for (const auto& r : rows) data.push_back({r.y, r.delta, r.weight});
    const PHFit fit = fit_ph(data, spec, {o.max_iterations, o.tolerance, seed, o.threads, 64});
    const IPHModel m{fit.rep, Inhomogeneity::identity()};
    model = json::to_json(m);
    trace = fit.loglik_trace;
    model["fit"] = fit_summary(trace.back(), spec.free_parameters(), data.size(), fit.iterations, fit.converged);
    residuals = diagnostics::cox_snell_residuals(m, data);
  } else {
    PIConfig cfg;
    cfg.max_iterations = o.max_iterations;
    cfg.relative_tolerance = o.tolerance;
    cfg.seed = seed;
    cfg.threads = o.threads;
    const PIFit fit = fit_pi(rows, {spec, family, false, o.initial_parameter}, cfg);
    const IPHModel m{fit.model.rep, Inhomogeneity::of(family, std::exp(fit.model.gamma(0)))};
    model = json::to_json(m);
    trace = fit.loglik_trace;
    model["fit"] = fit_summary(trace.back(), free_parameter_count(spec, fit.model), rows.size(), fit.iterations,
                               fit.converged);
    residuals = diagnostics::cox_snell_residuals(fit.model, rows);
  }
  model["structure"] = to_string(spec.kind);
  write_json(dir / "model.json", model);
  auto tos = open_out(dir / "trace.csv");
  write_trace_csv(tos, trace);
  write_residuals(dir / "residuals.csv", residuals);
  std::cout << "loglik " << std::setprecision(10) << trace.back() << '\n';
  return 0;
}

struct FitPiOptions : ModelOptions {
  std::string data;
  bool theta_regression = false;
  bool no_standardize = false;
  double initial_parameter = 1.0;
};

int cmd_fit_pi(const FitPiOptions& o) {
  const auto table = csv::read_survival(o.data);
  const StructureSpec spec = o.spec();
  const PISpec pspec{spec, family_from_string(o.family), o.theta_regression, o.initial_parameter};
  PIConfig cfg;
  cfg.max_iterations = o.max_iterations;
  cfg.relative_tolerance = o.tolerance;
  cfg.seed = require_seed(o.seed, "fit-pi");
  cfg.threads = o.threads;
  cfg.standardize = !o.no_standardize;
  const fs::path dir = output_dir(o.out);
  const PIFit fit = fit_pi(table.rows, pspec, cfg);
  Json model = json::to_json(fit.model);
  model["structure"] = to_string(spec.kind);
  model["covariates"] = table.covariates;
  model["fit"] = fit_summary(fit.loglik_trace.back(), free_parameter_count(spec, fit.model), table.rows.size(),
                             fit.iterations, fit.converged);
  write_json(dir / "model.json", model);
  auto tos = open_out(dir / "trace.csv");
  write_trace_csv(tos, fit.loglik_trace);
  write_residuals(dir / "residuals.csv", diagnostics::cox_snell_residuals(fit.model, table.rows));
  std::cout << "loglik " << std::setprecision(10) << fit.loglik_trace.back() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct TableSource {
  std::string deaths, exposures, rates;
  std::string column = "Female";

  void add_to(CLI::App* app) {
    app->add_option("--deaths", deaths, "HMD Deaths_1x1 file");
    app->add_option("--exposures", exposures, "HMD Exposures_1x1 file");
    app->add_option("--rates", rates, "HMD Mx_1x1 file (instead of deaths and exposures)");
    app->add_option("--column", column, "Female | Male | Total");
  }
  bool given() const { return !deaths.empty() || !exposures.empty() || !rates.empty(); }
  mortality::LifeTable load() const {
    if (!rates.empty()) {
      if (!deaths.empty() || !exposures.empty()) throw InputError("give either --rates or --deaths/--exposures");
      return mortality::load_rates_file(rates, column);
    }
    if (deaths.empty() || exposures.empty()) throw InputError("--deaths and --exposures are both required");
    return mortality::load_table_files(deaths, exposures, column);
  }
};

mortality::MortalityCurve read_curve(const std::string& path) {
  const auto t = csv::read_table(path);
  const auto ja = t.column("age"), jm = t.column("log_mx");
  mortality::MortalityCurve c;
  for (const auto& r : t.rows) {
    if (r[ja] != std::floor(r[ja]) || r[ja] < 0) throw InputError("curve ages must be non-negative integers");
    if (!std::isfinite(r[jm])) throw InputError("curve log_mx must be finite");
    c.ages.push_back(static_cast<int>(r[ja]));
    c.log_mortality.push_back(r[jm]);
  }
  if (c.ages.empty()) throw InputError("curve file has no rows");
  return c;
}

struct FitMortalityOptions {
  TableSource source;
  std::string curve;
  std::string years;
  int p = 2;
  std::string structure = "general";
  std::string family = "gompertz";
  std::optional<std::uint64_t> seed;
  double em_tolerance = 1e-10;
  int em_max_iterations = 3000;
  int restarts = 10;
  int max_evaluations = 4000;
  int threads = 1;
  std::string out = ".";
};

int cmd_fit_mortality(const FitMortalityOptions& o) {
  mortality::MortalityCurve curve;
  std::vector<mortality::AgeObservation> implied;
  Json summary;
  if (!o.curve.empty()) {
    if (o.source.given()) throw InputError("give either --curve or a life table");
    curve = read_curve(o.curve);
    implied = mortality::implied_sample(curve);
  } else {
    const auto table = o.source.load();
    const auto [ylo, yhi] = table.year_range();
    const Range years = o.years.empty() ? Range{ylo, yhi} : parse_range(o.years, "years");
    curve = mortality::observed_curve(table, years.lo, years.hi);
    implied = mortality::implied_sample(table, years.lo, years.hi);
    summary["dropped_rows"] = table.dropped;
    summary["years"] = {years.lo, years.hi};
  }
  summary["excluded_zero_ages"] = curve.excluded_zero;
  const StructureSpec spec{structure_from_string(o.structure), o.p};
  spec.validate();
  const Family family = family_from_string(o.family);
  PIConfig cfg;
  cfg.seed = require_seed(o.seed, "fit-mortality");
  cfg.relative_tolerance = o.em_tolerance;
  cfg.max_iterations = o.em_max_iterations;
  cfg.threads = o.threads;
  const fs::path dir = output_dir(o.out);

  const auto sample = mortality::observations(implied);
  std::vector<double> starts{1.0};
  if (family == Family::gompertz) {
    const double b = mortality::senescent_slope(curve);
    if (b > 0.0) starts = {b, 0.5 * b, 1.5 * b};
  }
  const IPHModel em = mortality::em_fit(sample, spec, family, cfg, starts);
  mortality::DirectFitConfig dcfg;
  dcfg.restarts = o.restarts;
  dcfg.optimizer.max_evaluations = o.max_evaluations;
  const auto direct = mortality::direct_fit(em, curve, dcfg);

  summary["em"] = {{"loss", direct.initial_loss}, {"loglik", mortality::sample_loglik(em, sample)}};
  summary["direct"] = {{"loss", direct.loss},
                       {"loglik", mortality::sample_loglik(direct.model, sample)},
                       {"evaluations", direct.evaluations}};
  write_json(dir / "em_model.json", json::to_json(em));
  write_json(dir / "model.json", json::to_json(direct.model));
  write_json(dir / "summary.json", summary);
  {
    auto os = open_out(dir / "curve.csv");
    mortality::write_curve_csv(os, curve, em, "em");
    mortality::write_curve_csv(os, curve, direct.model, "direct", false);
  }
  {
    auto os = open_out(dir / "loss_trace.csv");
    os << "iteration,loss\n" << std::setprecision(17);
    for (std::size_t i = 0; i < direct.loss_trace.size(); ++i) os << i << ',' << direct.loss_trace[i] << '\n';
  }
  std::cout << std::setprecision(10) << "loss_em " << direct.initial_loss << "\nloss_direct " << direct.loss << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct SimulateOptions {
  std::string study;
  std::string curve_model;
  std::string ages = "0:110";
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_simulate(const SimulateOptions& o) {
  if (!o.curve_model.empty()) {
    if (!o.study.empty()) throw InputError("give either --study or --curve-model");
    const IPHModel m = json::iph_from_json(read_json(o.curve_model));
    const Range ages = parse_range(o.ages, "ages");
    if (ages.lo < 0) throw InputError("--ages must be non-negative");
    auto os = open_out(o.out.empty() ? "curve.csv" : o.out);
    os << "age,log_mx\n" << std::setprecision(17);
    for (int a = ages.lo; a <= ages.hi; ++a) os << a << ',' << mortality::model_log_mortality(m, a) << '\n';
    return 0;
  }
  if (o.study != "sec6") throw InputError("--study must be 'sec6' (or use --curve-model)");
  const auto data = diagnostics::simulate_study(require_seed(o.seed, "simulate"));
  csv::SurvivalTable t{{"group"}, false, data};
  auto os = open_out(o.out.empty() ? "study.csv" : o.out);
  csv::write_survival(os, t);
  return 0;
}

struct DiagnoseOptions {
  std::string data;
  std::string model;
  std::string out = ".";
};

int cmd_diagnose(const DiagnoseOptions& o) {
  const auto table = csv::read_survival(o.data);
  const Json doc = read_json(o.model);
  PIModel model = json::pi_from_json(doc);
  std::vector<RegObservation> rows = table.rows;
  if (model.beta.size() == 0 && model.gamma.size() <= 1)
    for (auto& r : rows) r.x.resize(0);
  const fs::path dir = output_dir(o.out);
  const auto residuals = diagnostics::cox_snell_residuals(model, rows);
  const auto km = diagnostics::kaplan_meier(residuals);
  const auto na = diagnostics::nelson_aalen(residuals);
  const auto report = diagnostics::residual_report(residuals);
  write_residuals(dir / "residuals.csv", residuals);
  {
    auto os = open_out(dir / "km.csv");
    diagnostics::write_estimator_csv(os, km);
  }
  {
    auto os = open_out(dir / "na.csv");
    diagnostics::write_estimator_csv(os, na);
  }
  const double ll = pi_loglik(model, rows);
  Json r{{"n", rows.size()},
         {"band_coverage", report.band_coverage},
         {"na_slope", report.slope},
         {"pass", report.pass()},
         {"loglik", ll},
         {"all_censored", km.all_censored}};
  if (doc.contains("structure")) {
    const StructureSpec spec{structure_from_string(doc.at("structure").get<std::string>()),
                             static_cast<int>(model.rep.order())};
    const auto ic = diagnostics::information_criteria(ll, free_parameter_count(spec, model), rows.size());
    r["aic"] = ic.aic;
    r["bic"] = ic.bic;
    r["caveat"] = diagnostics::InformationCriteria::caveat;
  }
  write_json(dir / "report.json", r);
  std::cout << std::setprecision(6) << "band_coverage " << report.band_coverage << "\nna_slope " << report.slope
            << "\npass " << (report.pass() ? "yes" : "no") << '\n';
  return 0;
}

struct LeeCarterOptions {
  TableSource source;
  std::string ages = "0:99";
  std::string years;
  std::string out = ".";
};

int cmd_lee_carter(const LeeCarterOptions& o) {
  const auto table = o.source.load();
  const auto [ylo, yhi] = table.year_range();
  const Range years = o.years.empty() ? Range{ylo, yhi} : parse_range(o.years, "years");
  const Range ages = parse_range(o.ages, "ages");
  const Matrix M = mortality::log_rate_matrix(table, ages.lo, ages.hi, years.lo, years.hi);
  const auto lc = mortality::lee_carter_fit(M);
  const fs::path dir = output_dir(o.out);
  {
    auto os = open_out(dir / "lee_carter_ages.csv");
    std::vector<std::vector<double>> rows;
    for (Eigen::Index i = 0; i < lc.a.size(); ++i) rows.push_back({double(ages.lo + i), lc.a(i), lc.b(i)});
    csv::write_table(os, {"age", "a", "b"}, rows);
  }
  {
    auto os = open_out(dir / "lee_carter_years.csv");
    std::vector<std::vector<double>> rows;
    for (Eigen::Index t = 0; t < lc.k.size(); ++t) rows.push_back({double(years.lo + t), lc.k(t)});
    csv::write_table(os, {"year", "k"}, rows);
  }
  const double rmse = (lc.fitted() - M).norm() / std::sqrt(static_cast<double>(M.size()));
  write_json(dir / "lee_carter.json", {{"rmse", rmse}, {"ages", {ages.lo, ages.hi}}, {"years", {years.lo, years.hi}}});
  std::cout << "rmse " << std::setprecision(10) << rmse << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// --config: a JSON object whose keys are long option names (without dashes).
// Its values are inserted right after the subcommand so that command-line
// flags, parsed later, take precedence.

std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (config.empty()) return args;
  const Json j = read_json(config);
  if (!j.is_object()) throw InputError("--config file must hold a JSON object");
  std::size_t pos = 0;
  if (args.empty() || args[0].rfind("-", 0) == 0) {
    if (!j.contains("command")) throw InputError("no subcommand given");
    args.insert(args.begin(), j.at("command").get<std::string>());
  }
  pos = 1;
  std::vector<std::string> extra;
  for (const auto& [key, value] : j.items()) {
    if (key == "command") continue;
    if (key == "data") {
      extra.push_back(value.get<std::string>());
      continue;
    }
    if (value.is_boolean()) {
      if (value.get<bool>()) extra.push_back("--" + key);
    } else if (value.is_string()) {
      extra.insert(extra.end(), {"--" + key, value.get<std::string>()});
    } else if (value.is_number()) {
      extra.insert(extra.end(), {"--" + key, value.dump()});
    } else {
      throw InputError("--config: unsupported value for '" + key + "'");
    }
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(pos), extra.begin(), extra.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inhomogeneous phase-type fitting, regression and mortality tools"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.add_option("--config", "JSON file of option values; flags override it");

  FitPhOptions ph;
  auto* fit_ph_cmd = app.add_subcommand("fit-ph", "EM fit of a (matrix-Weibull/Gompertz) phase-type model");
  ph.add_to(fit_ph_cmd, "identity");
  fit_ph_cmd->add_option("data", ph.data, "Survival CSV")->required();
  fit_ph_cmd->add_option("--initial-parameter", ph.initial_parameter, "Starting Weibull/Gompertz parameter");

  FitPiOptions pi;
  auto* fit_pi_cmd = app.add_subcommand("fit-pi", "Proportional-intensities regression");
  pi.add_to(fit_pi_cmd, "weibull");
  fit_pi_cmd->add_option("data", pi.data, "Survival CSV with covariates")->required();
  fit_pi_cmd->add_flag("--theta-regression", pi.theta_regression, "Let the intensity parameter depend on x");
  fit_pi_cmd->add_flag("--no-standardize", pi.no_standardize, "Fit on the raw covariate scale");
  fit_pi_cmd->add_option("--initial-parameter", pi.initial_parameter, "Starting intensity parameter");

  FitMortalityOptions mo;
  auto* mort_cmd = app.add_subcommand("fit-mortality", "EM then direct log-mortality fit");
  mo.source.add_to(mort_cmd);
  mort_cmd->add_option("--curve", mo.curve, "CSV with columns age,log_mx (instead of a life table)");
  mort_cmd->add_option("--years", mo.years, "Year range A:B");
  mort_cmd->add_option("--p", mo.p, "Number of phases")->check(CLI::PositiveNumber);
  mort_cmd->add_option("--structure", mo.structure, "general | coxian | generalized_coxian");
  mort_cmd->add_option("--family", mo.family, "gompertz | weibull | identity");
  mort_cmd->add_option("--seed", mo.seed, "Seed of the EM initial representation");
  mort_cmd->add_option("--em-tol", mo.em_tolerance, "EM relative tolerance")->check(CLI::PositiveNumber);
  mort_cmd->add_option("--em-max-iter", mo.em_max_iterations, "EM iteration budget")->check(CLI::PositiveNumber);
  mort_cmd->add_option("--restarts", mo.restarts, "Nelder-Mead restarts")->check(CLI::NonNegativeNumber);
  mort_cmd->add_option("--max-evals", mo.max_evaluations, "Evaluations per Nelder-Mead run")
      ->check(CLI::PositiveNumber);
  mort_cmd->add_option("--threads", mo.threads, "Worker threads")->check(CLI::PositiveNumber);
  mort_cmd->add_option("--out", mo.out, "Output directory");

  SimulateOptions so;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate the two-group study or a model mortality curve");
  sim_cmd->add_option("--study", so.study, "sec6");
  sim_cmd->add_option("--curve-model", so.curve_model, "Model JSON whose log-mortality curve is written");
  sim_cmd->add_option("--ages", so.ages, "Age range A:B for --curve-model");
  sim_cmd->add_option("--seed", so.seed, "Root seed");
  sim_cmd->add_option("--out", so.out, "Output CSV");

  DiagnoseOptions dg;
  auto* diag_cmd = app.add_subcommand("diagnose", "Cox-Snell residual diagnostics of a fitted model");
  diag_cmd->add_option("data", dg.data, "Survival CSV")->required();
  diag_cmd->add_option("--model", dg.model, "Model JSON")->required();
  diag_cmd->add_option("--out", dg.out, "Output directory");

  LeeCarterOptions lo;
  auto* lc_cmd = app.add_subcommand("lee-carter", "Lee-Carter fit of a life table block");
  lo.source.add_to(lc_cmd);
  lc_cmd->add_option("--ages", lo.ages, "Age range A:B");
  lc_cmd->add_option("--years", lo.years, "Year range A:B");
  lc_cmd->add_option("--out", lo.out, "Output directory");

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*fit_ph_cmd) return cmd_fit_ph(ph);
    if (*fit_pi_cmd) return cmd_fit_pi(pi);
    if (*mort_cmd) return cmd_fit_mortality(mo);
    if (*sim_cmd) return cmd_simulate(so);
    if (*diag_cmd) return cmd_diagnose(dg);
    if (*lc_cmd) return cmd_lee_carter(lo);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "fit error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "fit error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
