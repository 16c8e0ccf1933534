#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tdiff/analytic.hpp"
#include "tdiff/simulate.hpp"

namespace an = tdiff::analytic;
using tdiff::ErgodicParams;
using tdiff::ModelParams;

namespace {

const ErgodicParams kTable1(-0.01, 0.02, 0.10, 0.07);
const ErgodicParams kUnit(-0.5, 0.5, 1.0, 1.0);

ErgodicParams random_params(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> b(0.05, 2.0), s(0.2, 2.0);
  return ErgodicParams(-b(gen), b(gen), s(gen), s(gen));
}

// Stationary tails are exponential with these means.
double tail_plus(const ErgodicParams& p) { return p.sigma_plus() * p.sigma_plus() / (-2 * p.b_plus()); }
double tail_minus(const ErgodicParams& p) { return p.sigma_minus() * p.sigma_minus() / (2 * p.b_minus()); }

template <class F>
double stationary_average(const ErgodicParams& p, F&& f) {
  const double r = p.threshold();
  auto g = [&](double x) { return tdiff::stationary_density(p, x) * f(x); };
  return oracle::simpson(g, r - 60 * tail_minus(p), std::nextafter(r, -1e9), 40000) +
         oracle::simpson(g, std::nextafter(r, 1e9), r + 60 * tail_plus(p), 40000);
}

}  // namespace

TEST(ScaleSpeed, Examples) {
  const auto at0 = an::scale_speed(kUnit, 0.0);
  EXPECT_EQ(at0.scale, 0.0);
  EXPECT_DOUBLE_EQ(at0.speed, 2.0);
  const auto at1 = an::scale_speed(kUnit, 1.0);
  EXPECT_DOUBLE_EQ(at1.log_density, -1.0);
  EXPECT_NEAR(at1.speed, 0.735758882342885, 1e-14);
  // S(1) = int_0^1 e^{y} dy
  EXPECT_NEAR(at1.scale, std::exp(1.0) - 1.0, 1e-14);
}

TEST(ScaleSpeed, NormalizedSpeedIsStationaryDensity) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> x(-3, 3);
  for (int i = 0; i < 20; ++i) {
    const auto p = random_params(gen);
    const double v = x(gen);
    EXPECT_NEAR(an::scale_speed(p, v).speed / an::speed_mass(p), tdiff::stationary_density(p, v),
                1e-12 * tdiff::stationary_density(p, v));
  }
}

TEST(MinimalFunctions, UnitAtThresholdAndCoefficientSums) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> lam(0.01, 20);
  for (int i = 0; i < 50; ++i) {
    const auto p = random_params(gen);
    const double l = lam(gen);
    const auto m = an::minimal_functions(p, l, 0.0);
    EXPECT_NEAR(m.psi, 1.0, 1e-13);
    EXPECT_NEAR(m.phi, 1.0, 1e-13);
    const auto c = an::minimal_coefficients(p, l);
    EXPECT_NEAR(c.kappa_plus + c.delta_plus, 1.0, 1e-12);
    EXPECT_NEAR(c.kappa_minus + c.delta_minus, 1.0, 1e-12);
  }
  EXPECT_THROW(an::minimal_functions(kUnit, 0.0, 1.0), std::invalid_argument);
}

TEST(MinimalFunctions, SolveTheEquationAwayFromTheThreshold) {
  std::mt19937_64 gen(3);
  const double e = 1e-4;
  for (int i = 0; i < 20; ++i) {
    const auto p = random_params(gen);
    for (double l : {0.3, 1.0, 3.0})
      for (double x : {-1.0, 1.0}) {
        auto check = [&](auto u) {
          const double d1 = (u(x + e) - u(x - e)) / (2 * e);
          const double d2 = (u(x + e) - 2 * u(x) + u(x - e)) / (e * e);
          const double s = p.params().volatility(x), b = p.params().drift(x);
          const double res = 0.5 * s * s * d2 + b * d1 - l * u(x);
          EXPECT_LT(std::abs(res) / (std::abs(l * u(x)) + std::abs(b * d1)), 1e-5);
        };
        check([&](double y) { return an::minimal_functions(p, l, y).psi; });
        check([&](double y) { return an::minimal_functions(p, l, y).phi; });
      }
  }
}

TEST(MinimalFunctions, DerivativesMatchAcrossTheThreshold) {
  std::mt19937_64 gen(4);
  const double e = 1e-8;
  for (int i = 0; i < 20; ++i) {
    const auto p = random_params(gen);
    for (double l : {0.3, 1.0, 3.0}) {
      auto slope = [&](auto u, double a, double b) { return (u(b) - u(a)) / (b - a); };
      auto psi = [&](double y) { return an::minimal_functions(p, l, y).psi; };
      auto phi = [&](double y) { return an::minimal_functions(p, l, y).phi; };
      EXPECT_NEAR(slope(psi, -e, -e / 2), slope(psi, e / 2, e), 1e-5 * std::abs(slope(psi, e / 2, e)));
      EXPECT_NEAR(slope(phi, -e, -e / 2), slope(phi, e / 2, e), 1e-5 * std::abs(slope(phi, e / 2, e)));
    }
  }
}

TEST(MinimalFunctions, MonotoneAndPositive) {
  std::mt19937_64 gen(5);
  for (int i = 0; i < 10; ++i) {
    const auto p = random_params(gen);
    double prev_psi = 0, prev_phi = 1e300;
    for (double x = -3; x <= 3; x += 0.01) {
      const auto m = an::minimal_functions(p, 0.7, x);
      EXPECT_GT(m.psi, prev_psi);
      EXPECT_LT(m.phi, prev_phi);
      EXPECT_GT(m.phi, 0);
      prev_psi = m.psi;
      prev_phi = m.phi;
    }
  }
}

TEST(Wronskian, Examples) {
  EXPECT_NEAR(an::wronskian(kUnit, 1.0), 2.0, 1e-15);
  EXPECT_NEAR(an::wronskian(kTable1, 1e-6) / 1e-6 / 150.0, 1.0, 1e-3);
  std::mt19937_64 gen(6);
  for (int i = 0; i < 50; ++i) {
    const auto p = random_params(gen);
    for (double l = 1e-6; l < 1e3; l *= 10) EXPECT_GT(an::wronskian(p, l), 0);
  }
  EXPECT_THROW(an::wronskian(kUnit, -1.0), std::invalid_argument);
}

TEST(Wronskian, EqualsFiniteDifferenceDefinition) {
  std::mt19937_64 gen(7);
  const double e = 1e-5;
  for (int i = 0; i < 10; ++i) {
    const auto p = random_params(gen);
    for (double x : {-1.0, 1.0}) {
      const double l = 0.8;
      auto m = [&](double y) { return an::minimal_functions(p, l, y); };
      const double dpsi = (m(x + e).psi - m(x - e).psi) / (2 * e);
      const double dphi = (m(x + e).phi - m(x - e).phi) / (2 * e);
      // S'(x) = exp(-2 b x / sigma^2)
      const double s = p.params().volatility(x), b = p.params().drift(x);
      const double sprime = std::exp(-2 * b * x / (s * s));
      EXPECT_NEAR((m(x).phi * dpsi - m(x).psi * dphi) / sprime, an::wronskian(p, l),
                  1e-5 * an::wronskian(p, l));
    }
  }
}

TEST(Resolvent, SymmetryPositivityAndNormalization) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> lv(-2, 2);
  for (int i = 0; i < 20; ++i) {
    const auto p = random_params(gen);
    const double x = lv(gen), y = lv(gen);
    const double a = an::resolvent(p, 1.3, x, y) / an::scale_speed(p, y).speed;
    const double b = an::resolvent(p, 1.3, y, x) / an::scale_speed(p, x).speed;
    EXPECT_NEAR(a, b, 1e-12 * a);
    EXPECT_GT(an::resolvent(p, 1.3, x, y), 0);
  }
  for (const auto& p : {kUnit, ErgodicParams(-0.3, 0.8, 1.4, 0.6)})
    for (double l : {0.5, 1.0, 2.0})
      for (double x : {-1.0, 0.0, 1.0}) {
        auto f = [&](double y) { return an::resolvent(p, l, x, y); };
        const double lo = -60 * tail_minus(p), hi = 60 * tail_plus(p);
        std::vector<double> cuts{lo, std::min(0.0, x), std::max(0.0, x), hi};
        EXPECT_NEAR(oracle::simpson_split(f, cuts, 40000), 1.0 / l, 1e-6);
      }
}

TEST(LaplaceCrossing, RatioAndDecay) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> lv(0.05, 3), lam(0.1, 5);
  for (int i = 0; i < 30; ++i) {
    const auto p = random_params(gen);
    const double l = lam(gen);
    for (double x : {lv(gen), -lv(gen)}) {
      const auto t = an::laplace_crossing(p, l, x);
      // the opposite side's coefficients enter the ratio
      const double b = x > 0 ? p.b_minus() : -p.b_plus();
      const double s = x > 0 ? p.sigma_minus() : p.sigma_plus();
      EXPECT_NEAR(t.lg / t.lj, s * s / (b + std::sqrt(b * b + 2 * s * s * l)), 1e-12 * t.lg / t.lj);
    }
  }
  EXPECT_LT(an::laplace_crossing(kUnit, 1.0, 50.0).lj, 1e-20);
  EXPECT_LT(an::laplace_crossing(kUnit, 1.0, -50.0).lg, 1e-20);
  EXPECT_THROW(an::laplace_crossing(kUnit, 1.0, 0.0), std::invalid_argument);
}

TEST(LaplaceCrossing, MonteCarloTransformOfCrossingProbability) {
  // int e^{-t} P(X_t < 0 | X_0 = 0.5) dt by simulation on a fine Euler grid
  const double dt = 1e-3, horizon = 16.0;
  const int steps = static_cast<int>(horizon / dt);
  const int reps = 2000;
  double sum = 0, sum2 = 0;
  for (int r = 0; r < reps; ++r) {
    tdiff::RandomStream rng(77, r);
    double x = 0.5, acc = 0;
    for (int k = 1; k <= steps; ++k) {
      x += (x >= 0 ? -0.5 : 0.5) * dt + std::sqrt(dt) * rng.normal();
      if (x < 0) acc += std::exp(-k * dt) * dt;
    }
    sum += acc;
    sum2 += acc * acc;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sum2 / reps - mean * mean) / reps);
  EXPECT_NEAR(mean, an::laplace_crossing(kUnit, 1.0, 0.5).lj, 3 * se);
}

TEST(StationaryAverages, DisplayedLgAverageIsExactlyInverseSquare) {
  std::mt19937_64 gen(10);
  for (int i = 0; i < 20; ++i) {
    const auto p = random_params(gen);
    const double l = 0.1 + i;
    EXPECT_NEAR(an::stationary_laplace_averages(p, l).elg * l * l, tdiff::asymptotic_constants(p).l_inf / 2,
                1e-12);
  }
}

TEST(StationaryAverages, ClosedFormsMatchQuadrature) {
  for (const auto& p : {kUnit, kTable1, ErgodicParams(-0.5, 0.5, 1.0, 0.7)})
    for (double l : {0.5, 1.0, 4.0}) {
      const auto avg = an::stationary_laplace_averages(p, l);
      const double ej = stationary_average(p, [&](double x) { return an::laplace_crossing(p, l, x).lj; });
      const double eg = stationary_average(p, [&](double x) { return an::laplace_crossing(p, l, x).lg; });
      const double ea =
          stationary_average(p, [&](double x) { return std::abs(x) * an::laplace_crossing(p, l, x).lg; });
      EXPECT_NEAR(ej, avg.elj, 1e-8 * avg.elj);
      EXPECT_NEAR(ea, avg.elabsg, 1e-8 * avg.elabsg);
      EXPECT_NEAR(eg, avg.elg_exact, 1e-8 * avg.elg_exact);
      // the displayed c / lambda^2 is only the large-lambda limit
      EXPECT_LT(avg.elg_exact, avg.elg);
    }
}

TEST(StationaryAverages, LargeLambdaLimitOfLj) {
  for (const auto& p : {kUnit, kTable1}) {
    const double l = 1e6;
    const double c = p.rate();
    const double limit = std::sqrt(2.0) * 2 * c / (p.sigma_plus() + p.sigma_minus());
    EXPECT_NEAR(std::pow(l, 1.5) * an::stationary_laplace_averages(p, l).elj / limit, 1.0, 1e-2);
  }
}

TEST(DriftlessDensity, EqualVolatilitiesGiveGaussianKernel) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-2, 2), tt(0.1, 3), ss(0.3, 2);
  for (int i = 0; i < 20; ++i) {
    const double s = ss(gen), t = tt(gen), x = u(gen), y = u(gen);
    const ModelParams p{0, 0, s, s, 0};
    const double v = s * s * t;
    const double g = std::exp(-(y - x) * (y - x) / (2 * v)) / std::sqrt(2 * std::numbers::pi * v);
    EXPECT_NEAR(an::driftless_transition_density(p, t, x, y), g, 1e-12 * g + 1e-300);
  }
}

TEST(DriftlessDensity, NormalizationAndSkewAtOrigin) {
  const ModelParams p{0, 0, 2.0, 1.0, 0};
  for (double t : {0.5, 2.0})
    for (double x : {-1.0, 0.0, 1.0}) {
      auto f = [&](double y) { return an::driftless_transition_density(p, t, x, y); };
      const double span = 1 + 40 * 2 * std::sqrt(t);
      EXPECT_NEAR(oracle::simpson_split(f, {-span, std::min(0.0, x), std::max(0.0, x), span}, 40000), 1.0,
                  1e-8);
    }
  const double beta = (1.0 - 2.0) / 3.0;
  for (double y : {0.1, 0.7, 2.0}) {
    // q(1, 0, y) = p(1, 0, y / sigma_+) / sigma_+ with p(1, 0, z) = (1 + beta) phi(z)
    const double z = y / 2.0;
    const double phi = std::exp(-z * z / 2) / std::sqrt(2 * std::numbers::pi);
    EXPECT_NEAR(an::driftless_transition_density(p, 1.0, 0.0, y), (1 + beta) * phi / 2.0, 1e-14);
  }
  EXPECT_THROW(an::driftless_transition_density(p, 0.0, 0.0, 1.0), std::invalid_argument);
}

TEST(DriftlessDensity, CdfIsIntegralOfDensity) {
  const ModelParams p{0, 0, 2.0, 1.0, 0.3};
  for (double x : {-0.5, 0.3, 1.5})
    for (double y : {-2.0, 0.0, 0.3, 1.0, 4.0}) {
      auto f = [&](double v) { return an::driftless_transition_density(p, 1.0, x, v); };
      const double lo = -30.0;
      std::vector<double> cuts{lo};
      if (y > 0.3) cuts.push_back(0.3);
      cuts.push_back(y);
      EXPECT_NEAR(an::driftless_transition_cdf(p, 1.0, x, y), oracle::simpson_split(f, cuts, 40000), 1e-9);
    }
}

TEST(LaplaceInvert, ElementaryTransforms) {
  // 14 terms resolve 1/lambda^2 -> t to about 1e-6 even in exact arithmetic
  EXPECT_NEAR(an::laplace_invert([](double s) { return 1 / (s * s); }, 3.0), 3.0, 2e-6);
  EXPECT_NEAR(an::laplace_invert([](double s) { return 1 / (s * s); }, 3.0, 18), 3.0, 5e-8);
  EXPECT_NEAR(an::laplace_invert([](double s) { return 1 / (s + 1); }, 1.0), std::exp(-1.0), 1e-5 * std::exp(-1.0));
  EXPECT_THROW(an::laplace_invert([](double s) { return 1 / s; }, 1.0, 13), std::invalid_argument);
  EXPECT_THROW(an::laplace_invert([](double s) { return 1 / s; }, 1.0, 20), std::invalid_argument);
  EXPECT_THROW(an::laplace_invert([](double s) { return 1 / s; }, 0.0), std::invalid_argument);
}

TEST(LaplaceInvert, DisplayedLgAverageInvertsToLinear) {
  const double c = kTable1.rate();
  EXPECT_NEAR(an::laplace_invert([&](double s) { return an::stationary_laplace_averages(kTable1, s).elg; }, 1.0),
              c, 1e-6);
}

TEST(LaplaceInvert, CrossingProbabilityAtSmallLag) {
  // E[j] = (2 / (sqrt(pi/2) (s+ + s-))) (L_inf sqrt(h) - l1 h) + O(h^{3/2});
  // the sqrt(h) correction to the crossing rate is negative.
  const double h = 0.01;
  const auto k = tdiff::asymptotic_constants(kUnit);
  const double pre = 2.0 / (std::sqrt(std::numbers::pi / 2) * 2.0);
  const double ej = an::laplace_invert([&](double s) { return an::stationary_laplace_averages(kUnit, s).elj; }, h);
  EXPECT_NEAR(ej, pre * (k.l_inf * std::sqrt(h) - k.l1 * h), 5e-3 * ej);
  EXPECT_GT(std::abs(ej - pre * (k.l_inf * std::sqrt(h) + k.l1 * h)), 5e-2 * ej);
}

TEST(ExactCrossingMoments, RatesApproachTheLocalTimeLimit) {
  const auto m1 = an::exact_stationary_crossing_moments(kUnit, 1e-4);
  EXPECT_NEAR(m1.rate_l, 0.5, 0.01);
  EXPECT_NEAR(m1.rate_lbar, 0.5, 0.01);
  EXPECT_NEAR(m1.rate_lhat, 0.5, 0.01);
  // E[g] / h is c only in the small-lag limit
  const auto m = an::exact_stationary_crossing_moments(kUnit, 1.0);
  EXPECT_NEAR(m.eg, 0.144974, 1e-5);
  EXPECT_LT(m.eg, kUnit.rate());
}
