#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "stokesreg/smoothing.hpp"

using namespace stokesreg;

namespace {
const double kE1 = std::exp(-1.0);
}

TEST(ErrorFunction, MatchesSeriesOracle) {
  for (int i = 0; i <= 1000; ++i) {
    const double x = 12.0 * i / 1000.0;
    EXPECT_NEAR(std::erf(x), static_cast<double>(oracle::erf(x)), 1e-14) << x;
  }
}

TEST(S3Base, Examples) {
  EXPECT_EQ(s3_base(0.0), 0.0);
  EXPECT_NEAR(s3_base(1.0), std::erf(1.0) - (10.0 / 3.0) * kE1 / kSqrtPi, 1e-15);
  EXPECT_NEAR(s3_base(1.0), 0.1508550, 5e-8);
  EXPECT_NEAR(s3_base(8.0), 1.0, 1e-14);
}

TEST(S3SharpOriginal, Examples) {
  EXPECT_EQ(s3_sharp_original(0.0), 0.0);
  EXPECT_NEAR(s3_sharp_original(1.0), std::erf(1.0) + (26.0 / 9.0) * kE1 / kSqrtPi, 1e-15);
  EXPECT_NEAR(s3_sharp_original(1.0), 1.442301, 5e-7);
  EXPECT_NEAR(s3_sharp_original(30.0), 1.0, 1e-15);
}

TEST(S3SharpNew, Examples) {
  EXPECT_EQ(s3_sharp_new(0.0), 0.0);
  EXPECT_NEAR(s3_sharp_new(1.0), std::erf(1.0) - (22.0 / 9.0) * kE1 / kSqrtPi, 1e-15);
  EXPECT_NEAR(s3_sharp_new(1.0), 0.3353472, 5e-8);
  EXPECT_NEAR(s3_sharp_new(10.0), 1.0, 1e-14);
}

TEST(RS3Prime, ExamplesAndFiniteDifference) {
  EXPECT_EQ(r_s3_prime(0.0), 0.0);
  EXPECT_NEAR(r_s3_prime(1.0), 8.0 / (3.0 * kSqrtPi) * kE1, 1e-15);
  EXPECT_NEAR(r_s3_prime(1.0), 0.5534767, 5e-8);
  const double rho = 0.7, eps = 1e-5;
  EXPECT_NEAR((s3_base(rho + eps) - s3_base(rho - eps)) / (2 * eps) * rho, r_s3_prime(rho), 1e-8);
}

TEST(ScaledFactor, LimitsAtZero) {
  EXPECT_NEAR(scaled_factor(make_smoothing(SmoothingId::s3_base), 0.0), 8.0 / (15.0 * kSqrtPi), 1e-15);
  EXPECT_NEAR(scaled_factor(make_smoothing(SmoothingId::s2_base), 0.0), 4.0 / (3.0 * kSqrtPi), 1e-15);
  EXPECT_NEAR(scaled_factor(make_smoothing(SmoothingId::s1_base), 0.0), 2.0 / kSqrtPi, 1e-15);
  EXPECT_NEAR(make_smoothing(SmoothingId::s1_sharp).limit_at_zero(), 3.0090111, 1e-7);
  EXPECT_NEAR(make_smoothing(SmoothingId::s2_sharp).limit_at_zero(), 6.0180222, 1e-7);
}

TEST(ScaledFactor, DefinitionAwayFromZero) {
  for (auto id : {SmoothingId::s3_base, SmoothingId::s3_sharp_original, SmoothingId::s3_sharp_new,
                  SmoothingId::s1_base, SmoothingId::s2_base, SmoothingId::s1_sharp, SmoothingId::s2_sharp}) {
    const auto f = make_smoothing(id);
    EXPECT_NEAR(scaled_factor(f, 2.0), f(2.0) / std::pow(2.0, f.power()), 1e-15) << to_string(id);
  }
}

TEST(ScaledFactor, ContinuousAtSeriesSwitchAndCutoff) {
  for (auto id : {SmoothingId::s3_base, SmoothingId::s3_sharp_original, SmoothingId::s3_sharp_new,
                  SmoothingId::s1_sharp, SmoothingId::s2_sharp}) {
    const auto f = make_smoothing(id);
    const double sw = SmoothingFunction::kSeriesSwitch;
    const double below = f.series(sw), above = f(sw) / std::pow(sw, f.power());
    EXPECT_NEAR(below, above, 1e-13 * std::max(1.0, std::abs(above))) << to_string(id);
    const double fc = SmoothingFunction::kFarCutoff;
    EXPECT_NEAR(f(fc) / std::pow(fc, f.power()), std::pow(fc, -f.power()), 2e-14 * std::pow(fc, -f.power()));
  }
}

TEST(ScaledFactor, SeriesMatchesHighPrecisionOracleNearZero) {
  // s3_base(rho)/rho^5 from the long-double erf oracle where cancellation is mild
  const auto f = make_smoothing(SmoothingId::s3_base);
  for (double rho : {0.3, 0.45, 0.6}) {
    const long double r = rho;
    const long double v = oracle::erf(r) - 2.0L * r * (2.0L / 3.0L * r * r + 1.0L) * std::exp(-r * r) /
                                               1.772453850905516027298167483341145L;
    EXPECT_NEAR(f.scaled(rho), static_cast<double>(v / std::pow(r, 5)), 1e-12) << rho;
  }
}

TEST(SmoothingFunction, ApproachesOneFarOut) {
  for (auto id : {SmoothingId::s3_base, SmoothingId::s3_sharp_original, SmoothingId::s3_sharp_new,
                  SmoothingId::s1_base, SmoothingId::s2_base, SmoothingId::s1_sharp, SmoothingId::s2_sharp}) {
    const auto f = make_smoothing(id);
    for (double rho : {8.0, 9.0, 10.0, 20.0}) EXPECT_LE(std::abs(f(rho) - 1.0), 2e-14) << to_string(id);
  }
}

TEST(SmoothingFunction, RejectsFormThatIsNotSmallEnoughAtZero) {
  EXPECT_THROW(SmoothingFunction(SmoothingId::derived, 5, GaussPoly(1.0, Polynomial())), DerivationError);
}

TEST(Moment, PublishedClosedForms) {
  const auto base = make_smoothing(SmoothingId::s3_base);
  const auto m = moment(base, 2);
  EXPECT_NEAR(m.value, -8.0 / (3.0 * kSqrtPi), 1e-12);
  EXPECT_LE(m.quadrature_error_estimate, 1e-12);
  EXPECT_NEAR(moment(base.form().rho_derivative(), 2).value, 8.0 / kSqrtPi, 1e-12);
  EXPECT_NEAR(moment(make_smoothing(SmoothingId::s3_sharp_new), 2).value, 0.0, 1e-11);
  EXPECT_THROW(moment(base, -1), UsageError);
}

TEST(DeriveSharp, OneConditionGivesNewVariant) {
  const auto base = make_smoothing(SmoothingId::s3_base);
  const auto d = derive_sharp_one_condition(base, 2);
  ASSERT_EQ(d.coefficients.size(), 1u);
  EXPECT_NEAR(d.coefficients[0], 1.0 / 3.0, 1e-12);
  // polynomial part -(2/9)(9 rho + 6 rho^3 - 4 rho^5)
  const auto& p = d.sharp.form().poly();
  EXPECT_NEAR(p.coefficient(1), -2.0, 1e-12);
  EXPECT_NEAR(p.coefficient(3), -12.0 / 9.0, 1e-12);
  EXPECT_NEAR(p.coefficient(5), 8.0 / 9.0, 1e-12);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 6.0);
  for (int i = 0; i < 100; ++i) {
    const double rho = u(rng);
    EXPECT_NEAR(d.sharp(rho), s3_sharp_new(rho), 1e-13);
  }
  // int r^k (r s') dr = -(k+1) int r^k (s - 1) dr, so an already sharp input leaves 0/0
  EXPECT_THROW(derive_sharp_one_condition(make_smoothing(SmoothingId::s3_sharp_new), 2), DerivationError);
}

TEST(DeriveSharp, TwoConditionsGiveOriginalVariant) {
  const auto d = derive_sharp_two_conditions(make_smoothing(SmoothingId::s3_base), {0, 2});
  ASSERT_EQ(d.coefficients.size(), 2u);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 6.0);
  for (int i = 0; i < 100; ++i) {
    const double rho = u(rng);
    EXPECT_NEAR(d.sharp(rho), s3_sharp_original(rho), 1e-12);
  }
  const auto& p = d.sharp.form().poly();
  const double c[] = {0, 9, 0, 6, 0, -36, 0, 8};
  for (int k = 0; k < 8; ++k) EXPECT_NEAR(p.coefficient(k), -2.0 / 9.0 * c[k], 1e-11) << k;
  EXPECT_NEAR(moment(d.sharp, 0).value, 0.0, 1e-11);
  EXPECT_NEAR(moment(d.sharp, 2).value, 0.0, 1e-11);
}

TEST(DeriveSharp, RepeatedConditionIsSingular) {
  const SmoothingFunction erf_only(SmoothingId::derived, 1, GaussPoly(1.0, Polynomial()));
  EXPECT_NO_THROW(derive_sharp_one_condition(erf_only, 0));
  EXPECT_THROW(derive_sharp_two_conditions(erf_only, {2, 2}), DerivationError);
}

TEST(SingleLayerSmoothings, SharpPairSatisfiesMomentConditions) {
  const auto& s = single_layer_smoothings();
  for (const auto* f : {&s.s1_sharp, &s.s2_sharp}) {
    EXPECT_NEAR(moment(*f, 0).value, 0.0, 1e-11);
    EXPECT_NEAR(moment(*f, 2).value, 0.0, 1e-11);
  }
  EXPECT_EQ(s.s1_sharp.power(), 1);
  EXPECT_EQ(s.s2_sharp.power(), 3);
  // closed forms (10/3 rho - 4/3 rho^3) and (-2 rho + 28/3 rho^3 - 8/3 rho^5)
  for (double rho : {0.2, 0.9, 1.7, 3.0}) {
    const double g = std::exp(-rho * rho) / kSqrtPi;
    EXPECT_NEAR(s.s1_sharp(rho), std::erf(rho) + (10.0 / 3.0 * rho - 4.0 / 3.0 * std::pow(rho, 3)) * g, 1e-14);
    EXPECT_NEAR(s.s2_sharp(rho),
                std::erf(rho) + (-2.0 * rho + 28.0 / 3.0 * std::pow(rho, 3) - 8.0 / 3.0 * std::pow(rho, 5)) * g,
                1e-13);
  }
  EXPECT_NEAR(s.s2_base.series_coefficients()[0], 4.0 / (3.0 * kSqrtPi), 1e-15);
}

TEST(MakeSmoothing, DerivedIdHasNoFixedForm) { EXPECT_THROW(make_smoothing(SmoothingId::derived), UsageError); }
