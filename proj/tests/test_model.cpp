#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tdiff/model.hpp"

using tdiff::ErgodicParams;
using tdiff::ModelParams;

namespace {

const ErgodicParams kTable1(-0.01, 0.02, 0.10, 0.07);

ErgodicParams random_params(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> b(0.05, 2.0), s(0.2, 2.0), r(-1.0, 1.0);
  return ErgodicParams(-b(gen), b(gen), s(gen), s(gen), r(gen));
}

}  // namespace

TEST(ModelParams, RawAcceptsAnySignsButNeedsPositiveVolatility) {
  EXPECT_NO_THROW(ModelParams::raw(0.3, -0.2, 1.0, 1.0));
  EXPECT_THROW(ModelParams::raw(-1, 1, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(ModelParams::raw(-1, 1, 1.0, -2.0), std::invalid_argument);
}

TEST(ModelParams, ErgodicConstructorRejectsWrongSigns) {
  EXPECT_THROW(ErgodicParams(0.1, 0.2, 1, 1), std::domain_error);
  EXPECT_THROW(ErgodicParams(-0.1, -0.2, 1, 1), std::domain_error);
  EXPECT_THROW(ErgodicParams(-0.1, 0.0, 1, 1), std::domain_error);
  EXPECT_NO_THROW(ErgodicParams(-0.1, 0.2, 1, 1));
}

TEST(ModelParams, ThresholdBelongsToPlusSide) {
  const ModelParams p{-1.0, 2.0, 3.0, 4.0, 0.5};
  EXPECT_EQ(p.drift(0.5), -1.0);
  EXPECT_EQ(p.volatility(0.5), 3.0);
  EXPECT_EQ(p.drift(std::nextafter(0.5, 0.0)), 2.0);
}

TEST(AsymptoticConstants, Table1Values) {
  const auto k = tdiff::asymptotic_constants(kTable1);
  EXPECT_NEAR(k.q_inf_plus, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(k.q_inf_minus, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(k.l_inf, 0.04 / 3.0, 1e-15);
  EXPECT_NEAR(k.sigma_clt.xx, 0.015, 1e-15);
  EXPECT_NEAR(k.sigma_clt.yy, 0.0147, 1e-15);
  EXPECT_EQ(k.sigma_clt.xy, 0.0);
  EXPECT_NEAR(k.ex_plus, 1.0 / 3.0, 1e-15);
}

TEST(AsymptoticConstants, SymmetricCase) {
  for (double b : {0.1, 0.5, 2.0})
    for (double s : {0.3, 1.0}) {
      const auto k = tdiff::asymptotic_constants(ErgodicParams(-b, b, s, s));
      EXPECT_DOUBLE_EQ(k.q_inf_plus, 0.5);
      EXPECT_DOUBLE_EQ(k.q_inf_minus, 0.5);
      EXPECT_DOUBLE_EQ(k.l_inf, b);
      EXPECT_NEAR(k.sigma_clt.xx, 2 * s * s, 1e-14);
      EXPECT_NEAR(k.sigma_clt.yy, 2 * s * s, 1e-14);
    }
}

TEST(AsymptoticConstants, BiasCoefficientsForUnitSymmetricCase) {
  const auto k = tdiff::asymptotic_constants(ErgodicParams(-0.5, 0.5, 1.0, 1.0));
  // sqrt(pi/2) * 0.25 / 2 and -(3 sqrt(pi) / (4 sqrt 2)) * 0.25 * 1.5, evaluated by hand
  EXPECT_NEAR(k.l1, 0.15666426716443752, 1e-15);
  EXPECT_NEAR(k.l2, -0.35249460111998443, 1e-15);
}

TEST(AsymptoticConstants, IdentitiesAndSignsForRandomParams) {
  std::mt19937_64 gen(5);
  for (int i = 0; i < 100; ++i) {
    const auto p = random_params(gen);
    const auto k = tdiff::asymptotic_constants(p);
    EXPECT_DOUBLE_EQ(k.q_inf_plus + k.q_inf_minus, 1.0);
    EXPECT_NEAR(k.l_inf, 2 * k.q_inf_plus * -p.b_plus(), 1e-13);
    EXPECT_NEAR(k.l_inf, 2 * k.q_inf_minus * p.b_minus(), 1e-13);
    EXPECT_GT(k.l_inf, 0);
    EXPECT_GT(k.l1, 0);
    EXPECT_LT(k.l2, 0);
    EXPECT_GT(k.sigma_clt.xx, 0);
    EXPECT_GT(k.sigma_clt.yy, 0);
    EXPECT_GE(k.q1_inf_plus, 0);
    EXPECT_LE(k.q1_inf_minus, 0);
  }
}

TEST(AsymptoticConstants, ReflectionSwapsTheCltDiagonal) {
  std::mt19937_64 gen(6);
  for (int i = 0; i < 20; ++i) {
    const auto p = random_params(gen);
    const ErgodicParams mirror(-p.b_minus(), -p.b_plus(), p.sigma_minus(), p.sigma_plus());
    const auto a = tdiff::asymptotic_constants(p).sigma_clt;
    const auto b = tdiff::asymptotic_constants(mirror).sigma_clt;
    EXPECT_NEAR(a.xx, b.yy, 1e-12 * a.xx);
    EXPECT_NEAR(a.yy, b.xx, 1e-12 * a.yy);
  }
}

TEST(StationaryDensity, ValueAtThresholdAndDecay) {
  EXPECT_DOUBLE_EQ(tdiff::stationary_density(ErgodicParams(-0.5, 0.5, 1, 1), 0.0), 0.5);
  EXPECT_LT(tdiff::stationary_density(kTable1, 1e3), 1e-300);
  EXPECT_LT(tdiff::stationary_density(kTable1, -1e3), 1e-300);
}

TEST(StationaryDensity, NormalizationAndOccupationMomentsBySimpson) {
  std::mt19937_64 gen(8);
  for (int i = 0; i < 10; ++i) {
    const auto p = random_params(gen);
    const auto k = tdiff::asymptotic_constants(p);
    const double r = p.threshold();
    const double up = 60 * p.sigma_plus() * p.sigma_plus() / (-2 * p.b_plus());
    const double dn = 60 * p.sigma_minus() * p.sigma_minus() / (2 * p.b_minus());
    auto dens = [&](double x) { return tdiff::stationary_density(p, x); };
    const double plus = oracle::simpson(dens, r, r + up);
    const double minus = oracle::simpson(dens, r - dn, std::nextafter(r, -1e9));
    EXPECT_NEAR(plus + minus, 1.0, 1e-9);
    EXPECT_NEAR(plus, k.q_inf_plus, 1e-9);
    EXPECT_NEAR(oracle::simpson([&](double x) { return (x - r) * dens(x); }, r, r + up), k.q1_inf_plus, 1e-8);
    EXPECT_NEAR(oracle::simpson([&](double x) { return (x - r) * dens(x); }, r - dn, std::nextafter(r, -1e9)),
                k.q1_inf_minus, 1e-8);
  }
}

TEST(SampleStationary, Table1FractionAndPositiveMean) {
  tdiff::RandomStream rng(42, 0);
  const int n = 1'000'000;
  double above = 0, pos_sum = 0, pos_sq = 0;
  for (int i = 0; i < n; ++i) {
    const double x = tdiff::sample_stationary(kTable1, rng);
    const double pos = x > 0 ? x : 0;
    above += x >= 0;
    pos_sum += pos;
    pos_sq += pos * pos;
  }
  const double frac = above / n;
  EXPECT_NEAR(frac, 2.0 / 3.0, 3 * std::sqrt(2.0 / 9.0 / n));
  const double mean = pos_sum / n;
  const double se = std::sqrt((pos_sq / n - mean * mean) / n);
  EXPECT_NEAR(mean, 1.0 / 3.0, 3 * se);
}

TEST(SampleStationary, DeterministicGivenState) {
  tdiff::RandomStream a(9, 3), b(9, 3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(tdiff::sample_stationary(kTable1, a), tdiff::sample_stationary(kTable1, b));
}

TEST(HfLimitScale, Examples) {
  const ModelParams unit{-1, 1, 1, 1, 0};
  EXPECT_EQ(tdiff::hf_limit_scale(unit, 3.0, 0.0), 0.0);
  EXPECT_NEAR(tdiff::hf_limit_scale(unit, 2 * std::numbers::pi, 1.0), std::sqrt(4.0 / 3.0), 1e-12);
  const ModelParams p{-0.3, 0.2, 0.7, 1.3, 0};
  EXPECT_NEAR(tdiff::hf_limit_scale(p, 5.0, 4 * 0.37), 2 * tdiff::hf_limit_scale(p, 5.0, 0.37), 1e-14);
  EXPECT_THROW(tdiff::hf_limit_scale(p, 5.0, -1e-3), std::invalid_argument);
  EXPECT_THROW(tdiff::hf_limit_scale(p, 0.0, 1.0), std::invalid_argument);
}

TEST(CovMatrix2, EigenAndPsd) {
  const auto c = tdiff::CovMatrix2{2.0, 1.0, 2.0};
  EXPECT_NEAR(c.min_eigenvalue(), 1.0, 1e-15);
  EXPECT_TRUE(c.is_psd());
  EXPECT_FALSE((tdiff::CovMatrix2{1.0, 2.0, 1.0}).is_psd());
  EXPECT_TRUE(tdiff::CovMatrix2{}.is_psd());
}

TEST(Rng, StreamsAreKeyedAndReproducible) {
  tdiff::Xoshiro256pp a(1, 0), b(1, 0), c(1, 1), d(2, 0);
  EXPECT_EQ(a, b);
  const auto x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
  EXPECT_NE(x, d());
}
