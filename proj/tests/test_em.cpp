#include <gtest/gtest.h>

#include <sstream>

#include "helpers.hpp"
#include "oracles.hpp"

using namespace iph;

namespace {

PHRepresentation scalar_rep(double rate) {
  return PHRepresentation(Vector::Ones(1), Matrix::Constant(1, 1, -rate));
}

std::vector<SurvObservation> simulate_ph(const PHRepresentation& rep, int n, std::uint64_t seed,
                                         double censor_rate = 0.0) {
  std::mt19937_64 gen(seed);
  std::exponential_distribution<double> cens(censor_rate > 0.0 ? censor_rate : 1.0);
  std::vector<SurvObservation> out;
  for (int i = 0; i < n; ++i) {
    const double z = sample_absorption_time(rep, gen);
    if (censor_rate > 0.0) {
      const double c = cens(gen);
      out.push_back({std::min(z, c), z <= c ? 1 : 0, 1.0});
    } else {
      out.push_back({z, 1, 1.0});
    }
  }
  return out;
}

}  // namespace

TEST(InitStructure, ScalarAndCoxian) {
  const auto one = init_structure({Structure::general, 1}, 3);
  EXPECT_EQ(one.pi()(0), 1.0);
  EXPECT_LT(one.T()(0, 0), 0.0);

  const auto cox = init_structure({Structure::coxian, 3}, 3);
  EXPECT_EQ(cox.pi(), Vector::Unit(3, 0));
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l)
      if (l != k && l != k + 1) EXPECT_EQ(cox.T()(k, l), 0.0);
  EXPECT_LE(cox.T().rowwise().sum().maxCoeff(), 0.0);
  EXPECT_TRUE(StructureSpec({Structure::coxian, 3}).conforms(cox));

  const auto gcox = init_structure({Structure::generalized_coxian, 4}, 8);
  EXPECT_TRUE(StructureSpec({Structure::generalized_coxian, 4}).conforms(gcox));
  EXPECT_NEAR(gcox.pi().sum(), 1.0, 1e-12);
}

TEST(InitStructure, Deterministic) {
  const auto a = init_structure({Structure::general, 4}, 42);
  const auto b = init_structure({Structure::general, 4}, 42);
  EXPECT_EQ(a.pi(), b.pi());
  EXPECT_EQ(a.T(), b.T());
  const auto c = init_structure({Structure::general, 4}, 43);
  EXPECT_NE(a.T(), c.T());
}

TEST(EStep, ScalarObserved) {
  const std::vector<SurvObservation> d{{1.7, 1, 1.0}};
  const auto s = e_step(scalar_rep(2.0), d);
  EXPECT_NEAR(s.initiations(0), 1.0, 1e-14);
  EXPECT_NEAR(s.absorptions(0), 1.0, 1e-14);
  EXPECT_NEAR(s.sojourn(0), 1.7, 1e-13);
}

TEST(EStep, ScalarCensoredMemoryless) {
  const double theta = 2.0, z = 1.3;
  const std::vector<SurvObservation> d{{z, 0, 1.0}};
  const auto s = e_step(scalar_rep(theta), d);
  EXPECT_NEAR(s.initiations(0), 1.0, 1e-14);
  EXPECT_EQ(s.absorptions(0), 0.0);
  // sojourn is accumulated up to the censoring time only
  EXPECT_NEAR(s.sojourn(0), z, 1e-13);
}

TEST(EStep, CoxianMatchesConditionedPaths) {
  CoxianSpec spec{{1.0, 2.0}, {0.5}, false, {}};
  const auto rep = spec.to_representation();
  const std::vector<SurvObservation> d{{1.0, 1, 1.0}};
  const auto s = e_step(rep, d);
  const auto mc = oracle::conditioned_paths(rep.pi(), rep.T(), 1.0, true, 1000000, 0.005, 2024);
  ASSERT_GT(mc.accepted, 1000);
  for (int k = 0; k < 2; ++k) {
    EXPECT_LE(std::abs(s.initiations(k) - mc.B(k)), 3 * mc.B_se(k) + 1e-12);
    EXPECT_LE(std::abs(s.sojourn(k) - mc.V(k)), 3 * mc.V_se(k) + 1e-12);
    EXPECT_LE(std::abs(s.absorptions(k) - mc.Nabs(k)), 3 * mc.Nabs_se(k) + 1e-12);
  }
  EXPECT_LE(std::abs(s.jumps(0, 1) - mc.N(0, 1)), 3 * mc.N_se(0, 1));
}

TEST(EStep, CensoredMatchesConditionedPaths) {
  std::mt19937_64 gen(4);
  const auto rep = testing_helpers::random_rep(3, gen);
  const std::vector<SurvObservation> d{{0.8, 0, 1.0}};
  const auto s = e_step(rep, d);
  const auto mc = oracle::conditioned_paths(rep.pi(), rep.T(), 0.8, false, 400000, 0.0, 77);
  for (int k = 0; k < 3; ++k) {
    EXPECT_LE(std::abs(s.initiations(k) - mc.B(k)), 3.5 * mc.B_se(k));
    EXPECT_LE(std::abs(s.sojourn(k) - mc.V(k)), 3.5 * mc.V_se(k));
    for (int l = 0; l < 3; ++l)
      if (l != k) EXPECT_LE(std::abs(s.jumps(k, l) - mc.N(k, l)), 3.5 * mc.N_se(k, l));
  }
  EXPECT_EQ(s.absorptions.sum(), 0.0);
}

TEST(EStep, CountsBalance) {
  std::mt19937_64 gen(5);
  const auto rep = testing_helpers::random_rep(4, gen);
  auto data = simulate_ph(rep, 300, 9, 0.5);
  std::uniform_real_distribution<double> w(0.1, 3.0);
  double total = 0.0, observed = 0.0;
  for (auto& o : data) {
    o.weight = w(gen);
    total += o.weight;
    if (o.delta) observed += o.weight;
  }
  const auto s = e_step(rep, data);
  EXPECT_NEAR(s.initiations.sum(), total, 1e-8);
  EXPECT_NEAR(s.absorptions.sum(), observed, 1e-8);
  EXPECT_GE(s.sojourn.minCoeff(), 0.0);
  EXPECT_GE(s.jumps.minCoeff(), 0.0);
  EXPECT_EQ(s.jumps.diagonal().cwiseAbs().sum(), 0.0);
  EXPECT_NEAR(s.loglik, loglik(rep, data), 1e-9 * std::abs(s.loglik));
}

TEST(EStep, ThreadCountDoesNotChangeResult) {
  std::mt19937_64 gen(6);
  const auto rep = testing_helpers::random_rep(3, gen);
  const auto data = simulate_ph(rep, 500, 10, 0.3);
  const auto a = e_step(rep, data, 1);
  const auto b = e_step(rep, data, 3);
  EXPECT_EQ(a.initiations, b.initiations);
  EXPECT_EQ(a.sojourn, b.sojourn);
  EXPECT_EQ(a.jumps, b.jumps);
  EXPECT_EQ(a.absorptions, b.absorptions);
  EXPECT_EQ(a.loglik, b.loglik);
}

TEST(EStep, DegenerateObservationNamesIndex) {
  // a Coxian chain that must pass through both states has zero density at 0
  CoxianSpec spec{{1.0, 2.0}, {1.0}, false, {}};
  const std::vector<SurvObservation> d{{0.5, 1, 1.0}, {0.0, 1, 1.0}};
  try {
    e_step(spec.to_representation(), d);
    FAIL() << "expected DegenerateError";
  } catch (const DegenerateError& e) {
    EXPECT_EQ(e.index, 1u);
  }
}

TEST(EStep, FarTailObservationsStayFinite) {
  std::mt19937_64 gen(3);
  const auto rep = testing_helpers::random_rep(2, gen);
  const std::vector<SurvObservation> d{{900.0, 1, 1.0}, {1200.0, 0, 1.0}};
  const auto s = e_step(rep, d);
  EXPECT_NEAR(s.initiations.sum(), 2.0, 1e-8);
  EXPECT_TRUE(std::isfinite(s.loglik));
  EXPECT_NEAR(s.loglik, loglik(rep, d), 1e-9 * std::abs(s.loglik));
}

TEST(MStep, ScalarExponentialMle) {
  const std::vector<SurvObservation> d{{2.5, 1, 1.0}};
  const auto s = e_step(scalar_rep(1.0), d);
  const auto r = m_step(s, 1.0, {Structure::general, 1});
  EXPECT_EQ(r.pi()(0), 1.0);
  EXPECT_NEAR(r.T()(0, 0), -1.0 / 2.5, 1e-14);
}

TEST(MStep, HandArithmetic) {
  SufficientStats s = SufficientStats::zero(2);
  s.initiations << 2, 1;
  s.absorptions << 1, 2;
  s.sojourn << 4, 2;
  const auto r = m_step(s, 3.0, {Structure::general, 2});
  EXPECT_NEAR(r.pi()(0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.pi()(1), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.exit_rates()(0), 0.25, 1e-15);
  EXPECT_NEAR(r.exit_rates()(1), 1.0, 1e-15);
  EXPECT_EQ(r.T()(0, 1), 0.0);
}

TEST(MStep, RowSumsEqualMinusExitRates) {
  std::mt19937_64 gen(7);
  const auto rep = testing_helpers::random_rep(4, gen);
  const auto data = simulate_ph(rep, 200, 3, 0.2);
  const auto s = e_step(rep, data);
  const auto r = m_step(s, total_weight(data), {Structure::general, 4});
  for (int k = 0; k < 4; ++k) {
    const double exit = s.absorptions(k) / s.sojourn(k);
    EXPECT_NEAR(r.T().row(k).sum(), -exit, 1e-12);
  }
}

TEST(MStep, DeadStateKeepsPreviousRow) {
  SufficientStats s = SufficientStats::zero(2);
  s.initiations << 1, 0;
  s.absorptions << 1, 0;
  s.sojourn << 2, 0;
  const PHRepresentation prev(Vector::Unit(2, 0), Matrix(Eigen::Matrix2d{{-1, 0}, {0.5, -2}}));
  int dead = 0;
  const auto r = m_step(s, 1.0, {Structure::general, 2}, &prev, &dead);
  EXPECT_EQ(dead, 1);
  EXPECT_EQ(r.T().row(1), prev.T().row(1));
  EXPECT_THROW(m_step(s, 1.0, {Structure::general, 2}), DegenerateError);
}

TEST(Loglik, ScalarValues) {
  EXPECT_NEAR(loglik(scalar_rep(1.0), std::vector<SurvObservation>{{1.0, 1, 1.0}}), -1.0, 1e-15);
  EXPECT_NEAR(loglik(scalar_rep(1.0), std::vector<SurvObservation>{{1.0, 0, 1.0}}), -1.0, 1e-15);
}

TEST(Loglik, MatchesEvaluateSummation) {
  std::mt19937_64 gen(8);
  const auto rep = testing_helpers::random_rep(3, gen);
  auto data = simulate_ph(rep, 50, 4, 0.4);
  double want = 0.0;
  for (auto& o : data) {
    o.weight = 0.5 + (o.z > 1.0);
    const auto e = evaluate({rep, Inhomogeneity::identity()}, o.z);
    want += o.weight * std::log(o.delta ? e.density : e.survival);
  }
  EXPECT_NEAR(loglik(rep, data), want, 1e-10 * std::abs(want));
}

TEST(Loglik, ZeroDensityIsMinusInfinity) {
  CoxianSpec spec{{1.0, 2.0}, {1.0}, false, {}};
  EXPECT_EQ(loglik(spec.to_representation(), std::vector<SurvObservation>{{0.0, 1, 1.0}}),
            -std::numeric_limits<double>::infinity());
}

TEST(FitPh, ExponentialRate) {
  const auto data = simulate_ph(scalar_rep(2.0), 10000, 21);
  const auto fit = fit_ph(data, {Structure::general, 1}, {});
  double mean = 0.0;
  for (const auto& o : data) mean += o.z;
  mean /= data.size();
  const double rate = -fit.rep.T()(0, 0);
  EXPECT_GE(rate, 1.9);
  EXPECT_LE(rate, 2.1);
  EXPECT_NEAR(rate, 1.0 / mean, 1e-6);
}

TEST(FitPh, MonotoneTrace) {
  std::mt19937_64 gen(9);
  const auto truth = testing_helpers::random_rep(3, gen);
  for (double censor : {0.0, 0.4}) {
    const auto data = simulate_ph(truth, 400, 5, censor);
    EMConfig cfg;
    cfg.max_iterations = 150;
    cfg.relative_loglik_tolerance = 1e-12;
    const auto fit = fit_ph(data, {Structure::general, 3}, cfg);
    for (std::size_t i = 1; i < fit.loglik_trace.size(); ++i)
      EXPECT_GE(fit.loglik_trace[i], fit.loglik_trace[i - 1] - 1e-9) << i;
  }
}

TEST(FitPh, CoxianStructurePreserved) {
  std::mt19937_64 gen(10);
  const auto data = simulate_ph(testing_helpers::random_rep(3, gen), 300, 6, 0.2);
  const StructureSpec spec{Structure::coxian, 3};
  auto rep = match_scale(init_structure(spec, 1), data);
  for (int it = 0; it < 30; ++it) {
    rep = em_step(rep, data, spec).rep;
    ASSERT_TRUE(spec.conforms(rep)) << it;
  }
  const auto fit = fit_ph(data, spec, {});
  EXPECT_TRUE(spec.conforms(fit.rep));
}

TEST(FitPh, UncensoredMatchesWithoutCensoredBranch) {
  std::mt19937_64 gen(11);
  const auto data = simulate_ph(testing_helpers::random_rep(2, gen), 200, 7);
  EMConfig cfg;
  cfg.seed = 5;
  const auto a = fit_ph(data, {Structure::general, 2}, cfg);
  const auto b = fit_ph(data, {Structure::general, 2}, cfg);
  EXPECT_EQ(a.rep.T(), b.rep.T());
  EXPECT_EQ(a.rep.pi(), b.rep.pi());
  EXPECT_EQ(a.loglik_trace, b.loglik_trace);
}

TEST(FitPh, WeightScalingInvariance) {
  std::mt19937_64 gen(12);
  auto data = simulate_ph(testing_helpers::random_rep(2, gen), 200, 8, 0.3);
  EMConfig cfg;
  cfg.max_iterations = 100;
  const auto a = fit_ph(data, {Structure::general, 2}, cfg);
  for (auto& o : data) o.weight *= 7.5;
  const auto b = fit_ph(data, {Structure::general, 2}, cfg);
  EXPECT_LT((a.rep.T() - b.rep.T()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((a.rep.pi() - b.rep.pi()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(FitPh, TiesAggregated) {
  const std::vector<SurvObservation> d{{1.0, 1, 1.0}, {0.5, 0, 2.0}, {1.0, 1, 0.5}, {1.0, 0, 1.0},
                                       {0.3, 1, 0.0}};
  const auto agg = aggregate_ties(d);
  ASSERT_EQ(agg.size(), 3u);
  EXPECT_EQ(agg[0].z, 0.5);
  EXPECT_EQ(agg[1].delta, 0);
  EXPECT_EQ(agg[2].weight, 1.5);
}

TEST(FitPh, RejectsBadInput) {
  EXPECT_THROW(fit_ph(std::vector<SurvObservation>{}, {Structure::general, 1}, {}), InputError);
  EXPECT_THROW(fit_ph(std::vector<SurvObservation>{{-1.0, 1, 1.0}}, {Structure::general, 1}, {}),
               InputError);
  EXPECT_THROW(fit_ph(std::vector<SurvObservation>{{1.0, 1, 0.0}}, {Structure::general, 1}, {}),
               InputError);
}

TEST(FitPh, TraceCsv) {
  std::ostringstream os;
  write_trace_csv(os, {-3.5, -2.25});
  EXPECT_EQ(os.str(), "iteration,loglik\n0,-3.5\n1,-2.25\n");
}
