#include <gtest/gtest.h>

#include <sstream>

#include "helpers.hpp"
#include "oracles.hpp"

using namespace iph;
using namespace iph::diagnostics;

namespace {

std::vector<TimeStatus> exponential_sample(std::size_t n, double rate, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::exponential_distribution<double> e(rate);
  std::vector<TimeStatus> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({e(gen), 1});
  return out;
}

}  // namespace

TEST(KaplanMeier, UncensoredIsEmpirical) {
  const std::vector<TimeStatus> d{{3.0, 1}, {1.0, 1}, {4.0, 1}, {2.0, 1}};
  const auto km = kaplan_meier(d);
  ASSERT_EQ(km.times.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(km.times[i], i + 1.0);
    EXPECT_NEAR(km.values[i], 1.0 - (i + 1) / 4.0, 1e-15);
  }
  EXPECT_DOUBLE_EQ(km(0.5), 1.0);
  EXPECT_DOUBLE_EQ(km(2.5), 0.5);
  EXPECT_FALSE(km.all_censored);
}

TEST(KaplanMeier, SingleObservation) {
  const std::vector<TimeStatus> d{{2.0, 1}};
  const auto km = kaplan_meier(d);
  EXPECT_DOUBLE_EQ(km(1.999), 1.0);
  EXPECT_DOUBLE_EQ(km(2.0), 0.0);
  EXPECT_DOUBLE_EQ(km(5.0), 0.0);
}

TEST(KaplanMeier, HandComputedMixedFixture) {
  // times 1, 2+, 3, 3+, 5, 6+ ; at risk 6, 4, 2
  const std::vector<TimeStatus> d{{1, 1}, {2, 0}, {3, 1}, {3, 0}, {5, 1}, {6, 0}};
  const auto km = kaplan_meier(d);
  ASSERT_EQ(km.times.size(), 3u);
  const double s1 = 5.0 / 6.0, s2 = s1 * 3.0 / 4.0, s3 = s2 * 1.0 / 2.0;
  EXPECT_NEAR(km.values[0], s1, 1e-15);
  EXPECT_NEAR(km.values[1], s2, 1e-15);
  EXPECT_NEAR(km.values[2], s3, 1e-15);
  const double g = 1.0 / (6 * 5) + 1.0 / (4 * 3) + 1.0 / (2 * 1);
  EXPECT_NEAR(km.variance[2], s3 * s3 * g, 1e-15);
  const double half = 1.959963984540054 * std::sqrt(g);
  EXPECT_NEAR(km.lower[2], s3 * std::exp(-half), 1e-15);
  EXPECT_NEAR(km.upper[2], std::min(1.0, s3 * std::exp(half)), 1e-15);
}

TEST(KaplanMeier, AllCensoredIsFlagged) {
  const std::vector<TimeStatus> d{{1, 0}, {2, 0}};
  const auto km = kaplan_meier(d);
  EXPECT_TRUE(km.all_censored);
  EXPECT_TRUE(km.times.empty());
  EXPECT_DOUBLE_EQ(km(10.0), 1.0);
}

TEST(KaplanMeier, InvalidInput) {
  EXPECT_THROW(kaplan_meier(std::vector<TimeStatus>{}), InputError);
  EXPECT_THROW(kaplan_meier(std::vector<TimeStatus>{{-1.0, 1}}), InputError);
  EXPECT_THROW(kaplan_meier(std::vector<TimeStatus>{{1.0, 2}}), InputError);
}

TEST(KaplanMeier, MonotoneWithNonNegativeVariance) {
  auto d = exponential_sample(500, 1.0, 3);
  for (std::size_t i = 0; i < d.size(); i += 3) d[i].delta = 0;
  const auto km = kaplan_meier(d);
  for (std::size_t i = 0; i < km.times.size(); ++i) {
    EXPECT_GE(km.variance[i], 0.0);
    EXPECT_LE(km.lower[i], km.values[i]);
    EXPECT_GE(km.upper[i], km.values[i]);
    if (i) {
      EXPECT_LE(km.values[i], km.values[i - 1]);
      EXPECT_GT(km.times[i], km.times[i - 1]);
    }
  }
}

TEST(NelsonAalen, JumpsAndCensoring) {
  const std::vector<TimeStatus> d{{1, 1}, {2, 0}, {3, 1}};
  const auto na = nelson_aalen(d);
  ASSERT_EQ(na.times.size(), 2u);
  EXPECT_NEAR(na.values[0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(na.values[1], 1.0 / 3.0 + 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(na(0.5), 0.0);
  const auto none = nelson_aalen(std::vector<TimeStatus>{{1, 0}, {4, 0}});
  EXPECT_TRUE(none.all_censored);
  EXPECT_DOUBLE_EQ(none(3.0), 0.0);
}

TEST(NelsonAalen, CloseToMinusLogKaplanMeier) {
  const auto d = exponential_sample(10000, 2.0, 9);
  const auto km = kaplan_meier(d);
  const auto na = nelson_aalen(d);
  for (std::size_t i = 0; i + 1 < km.times.size() && km.values[i] > 0.01; i += 97) {
    EXPECT_NEAR(-std::log(km.values[i]), na.values[i], 0.01);
    if (i) EXPECT_GE(na.values[i], na.values[i - 1]);
  }
}

TEST(Residuals, ScalarExponentialIsRateTimesTime) {
  const PIModel m{PHRepresentation(Vector::Ones(1), Matrix::Constant(1, 1, -1.7)), Family::identity, Vector(),
                  Vector(), "exp", {}};
  std::vector<RegObservation> data{{0.5, 1, 1.0, Vector()}, {2.0, 0, 1.0, Vector()}};
  const auto r = cox_snell_residuals(m, data);
  EXPECT_NEAR(r[0].time, 0.85, 1e-14);
  EXPECT_NEAR(r[1].time, 3.4, 1e-14);
  EXPECT_EQ(r[1].delta, 0);
}

TEST(Residuals, TrueModelIsUnitExponential) {
  // mean of residuals with censored ones replaced by r + 1, over replications
  const PIModel truth = study_true_model();
  double mean = 0.0;
  const int reps = 50;
  for (int rep = 0; rep < reps; ++rep) {
    const auto data = simulate_study(derive_seed(1000, rep));
    const auto r = cox_snell_residuals(truth, data);
    double s = 0.0;
    for (const auto& x : r) s += x.delta ? x.time : x.time + 1.0;
    mean += s / static_cast<double>(r.size()) / reps;
  }
  EXPECT_NEAR(mean, 1.0, 0.1);
}

TEST(Residuals, ExponentialResidualsPassBandAndSlope) {
  // pointwise bands have correlated excursions, so single samples can miss; look at the average
  const int reps = 20;
  double coverage = 0.0, slope = 0.0;
  int passed = 0, wrong_passed = 0;
  for (int rep = 0; rep < reps; ++rep) {
    const auto d = exponential_sample(1000, 1.0, 100 + rep);
    const auto r = residual_report(d);
    coverage += r.band_coverage / reps;
    slope += r.slope / reps;
    passed += r.pass();
    std::vector<TimeStatus> scaled = d;
    for (auto& x : scaled) x.time *= 1.5;
    wrong_passed += residual_report(scaled).pass();
  }
  EXPECT_GE(coverage, 0.9);
  EXPECT_NEAR(slope, 1.0, 0.05);
  EXPECT_GE(passed, reps / 2);
  EXPECT_EQ(wrong_passed, 0);
}

TEST(InformationCriteria, VeteransTableArithmetic) {
  const auto a = information_criteria(-136.21, 5, 137);
  EXPECT_NEAR(a.aic, 282.42, 1e-9);
  EXPECT_NEAR(a.bic, 297.02, 5e-3);
  const auto b = information_criteria(-127.74, 7, 137);
  EXPECT_NEAR(b.aic, 269.48, 1e-9);
  EXPECT_NEAR(b.bic, 289.92, 5e-3);
  const auto z = information_criteria(0.0, 0, 10);
  EXPECT_EQ(z.aic, 0.0);
  EXPECT_EQ(z.bic, 0.0);
  EXPECT_THROW(information_criteria(0.0, 1, 0), InputError);
}

TEST(Study, SizesAndDeterminism) {
  const auto a = simulate_study(1);
  const auto b = simulate_study(1);
  ASSERT_EQ(a.size(), 1000u);
  int group1 = 0, censored = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    group1 += a[i].x(0) == 1.0;
    censored += a[i].delta == 0;
    EXPECT_EQ(a[i].y, b[i].y);
    EXPECT_EQ(a[i].delta, b[i].delta);
  }
  EXPECT_EQ(group1, 500);
  EXPECT_GE(censored, 50);
  EXPECT_LE(censored, 150);
  EXPECT_NE(simulate_study(2)[0].y, a[0].y);
}

TEST(Study, GroupModels) {
  const IPHModel g1 = study_group_model(1);
  EXPECT_EQ(g1.inhom.family(), Family::identity);
  EXPECT_DOUBLE_EQ(g1.rep.T()(0, 0), -20.0);
  EXPECT_DOUBLE_EQ(g1.rep.T()(2, 2), -0.2);
  EXPECT_EQ(study_group_model(0).inhom.family(), Family::weibull);
  // the combined PI model reproduces both groups
  const PIModel pi = study_true_model();
  for (double y : {0.1, 1.0, 5.0}) {
    EXPECT_NEAR(evaluate(pi.conditional(Vector::Zero(1)), y).survival, evaluate(study_group_model(0), y).survival,
                1e-13);
    EXPECT_NEAR(evaluate(pi.conditional(Vector::Ones(1)), y).survival, evaluate(g1, y).survival, 1e-13);
  }
  EXPECT_THROW(study_group_model(2), InputError);
}

TEST(Study, SeedSplitting) {
  EXPECT_EQ(derive_seed(1, 0), derive_seed(1, 0));
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 1), derive_seed(2, 0));
}

TEST(Export, EstimatorCsvRoundTrip) {
  const std::vector<TimeStatus> d{{1, 1}, {2, 0}, {3, 1}, {3.5, 1}};
  const auto km = kaplan_meier(d);
  std::ostringstream os;
  write_estimator_csv(os, km);
  std::istringstream in(os.str());
  const auto t = csv::read_table(in);
  EXPECT_EQ(t.header, (std::vector<std::string>{"time", "estimate", "lower", "upper"}));
  ASSERT_EQ(t.rows.size(), km.times.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_EQ(t.rows[i][0], km.times[i]);
    EXPECT_EQ(t.rows[i][1], km.values[i]);
    EXPECT_EQ(t.rows[i][2], km.lower[i]);
    EXPECT_EQ(t.rows[i][3], km.upper[i]);
  }
}
