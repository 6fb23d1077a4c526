#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "metareg/effect_sizes.hpp"
#include "metareg/model_spec.hpp"

using namespace metareg;

TEST(LogOddsRatio, SymmetricTable) {
  const auto e = log_odds_ratio({10, 20, 10, 20});
  EXPECT_NEAR(e.y, 0.0, 1e-15);
  EXPECT_NEAR(e.variance, 0.4, 1e-15);
}

TEST(LogOddsRatio, HandEvaluated) {
  const auto e = log_odds_ratio({10, 100, 20, 100});
  EXPECT_NEAR(e.y, std::log(10.0 * 80.0 / (90.0 * 20.0)), 1e-14);
  EXPECT_NEAR(e.y, -0.8109, 5e-5);
  EXPECT_NEAR(e.variance, 0.1736, 5e-5);
}

TEST(LogOddsRatio, ZeroCellGetsHalfCorrection) {
  // cells (0, 10, 5, 5)
  const auto e = log_odds_ratio({0, 10, 5, 10});
  EXPECT_NEAR(e.y, std::log(0.5 * 5.5 / (10.5 * 5.5)), 1e-14);
  EXPECT_NEAR(e.y, -3.0445, 5e-5);
  EXPECT_NEAR(e.variance, 1 / 0.5 + 1 / 10.5 + 2 / 5.5, 1e-14);
  EXPECT_NEAR(e.variance, 2.4589, 5e-5);
}

TEST(LogOddsRatio, NoCorrectionWithoutZeroCell) {
  const auto e = log_odds_ratio({1, 2, 1, 3});
  EXPECT_NEAR(e.y, std::log(1.0 * 2.0 / (1.0 * 1.0)), 1e-14);
  EXPECT_NEAR(e.variance, 1 + 1 + 1 + 0.5, 1e-14);
}

TEST(LogOddsRatio, ArmSwapNegates) {
  for (auto t : {TwoByTwoTable{3, 17, 8, 12}, TwoByTwoTable{0, 50, 3, 34}, TwoByTwoTable{14, 61, 15, 20}}) {
    const auto a = log_odds_ratio(t);
    const auto b = log_odds_ratio({t.events_ctl, t.total_ctl, t.events_trt, t.total_trt});
    EXPECT_NEAR(a.y, -b.y, 1e-14);
    EXPECT_NEAR(a.variance, b.variance, 1e-14);
    EXPECT_GT(a.variance, 0.0);
  }
}

TEST(LogOddsRatio, RejectsInvalidTables) {
  EXPECT_THROW(log_odds_ratio({1, 0, 1, 2}), ValidationError);
  EXPECT_THROW(log_odds_ratio({5, 4, 1, 2}), ValidationError);
  EXPECT_THROW(log_odds_ratio({-1, 4, 1, 2}), ValidationError);
  EXPECT_THROW(log_odds_ratio({std::nan(""), 4, 1, 2}), ValidationError);
}

TEST(LogitProportion, PercentDerivedRows) {
  struct Row {
    double n, pct, y, v;
  };
  const Row rows[] = {{50, 46.0, -0.1603, 0.0805},  {274, 72.5, 0.9694, 0.0183},
                      {55, 29.5, -0.8712, 0.0874},  {20, 80.0, 1.3863, 0.3125},
                      {56, 22.0, -1.2657, 0.1041},  {21, 55.0, 0.2007, 0.1924}};
  for (const auto& r : rows) {
    const auto e = logit_proportion(r.n * r.pct / 100.0, r.n);
    EXPECT_NEAR(e.y, r.y, 5e-5) << r.n;
    EXPECT_NEAR(e.variance, r.v, 5e-5) << r.n;
  }
}

TEST(LogitProportion, HalfEventsAndSwap) {
  for (double n : {4.0, 10.0, 37.0}) {
    const auto e = logit_proportion(n / 2, n);
    EXPECT_NEAR(e.y, 0.0, 1e-15);
    EXPECT_NEAR(e.variance, 4.0 / n, 1e-14);
  }
  const auto a = logit_proportion(7.3, 20);
  const auto b = logit_proportion(20 - 7.3, 20);
  EXPECT_NEAR(a.y + b.y, 0.0, 1e-14);
  EXPECT_NEAR(a.variance, b.variance, 1e-14);
}

TEST(LogitProportion, RejectsBoundaryCounts) {
  EXPECT_THROW(logit_proportion(0, 10), ValidationError);
  EXPECT_THROW(logit_proportion(10, 10), ValidationError);
  EXPECT_THROW(logit_proportion(1, 0), ValidationError);
}

TEST(LogRatioOfMeans, Formula) {
  const auto det = log_ratio_of_means(std::numbers::e, 0, 1, 1, 0, 1);
  EXPECT_NEAR(det.y, 1.0, 1e-15);
  EXPECT_EQ(det.variance, 0.0);
  const auto e = log_ratio_of_means(2, 1, 100, 1, 1, 100);
  EXPECT_NEAR(e.y, std::log(2.0), 1e-15);
  EXPECT_NEAR(e.variance, 0.0125, 1e-15);
  EXPECT_NEAR(log_ratio_of_means(3.1, 1, 10, 3.1, 2, 12).y, 0.0, 1e-15);
}

TEST(LogRatioOfMeans, ZeroVarianceRejectedByDataset) {
  const EffectEstimate e[] = {log_ratio_of_means(std::numbers::e, 0, 1, 1, 0, 1)};
  EXPECT_THROW(StudyDataset::from_estimates(e), ValidationError);
}

TEST(LogRatioOfMeans, RejectsNonpositiveMeans) {
  EXPECT_THROW(log_ratio_of_means(0, 1, 10, 1, 1, 10), ValidationError);
  EXPECT_THROW(log_ratio_of_means(1, 1, 10, -1, 1, 10), ValidationError);
  EXPECT_THROW(log_ratio_of_means(1, 1, 0.5, 1, 1, 10), ValidationError);
}
