#ifndef TDIFF_ANALYTIC_HPP
#define TDIFF_ANALYTIC_HPP

// Closed-form objects attached to the generator of the threshold diffusion:
// scale and speed, the minimal solutions of (A - lambda) u = 0, the resolvent
// kernel, Laplace transforms of one-step crossing functionals, the driftless
// transition density, and Gaver-Stehfest inversion. Everything here is used to
// cross-check the simulator and the path statistics against exact values.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <initializer_list>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "tdiff/model.hpp"

namespace tdiff::analytic {

namespace detail {

inline void require_positive_lambda(double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be strictly positive");
}

// sqrt(b^2 + 2 sigma^2 lambda)
inline double root(double b, double sigma, double lambda) {
  return std::sqrt(b * b + 2.0 * sigma * sigma * lambda);
}

// sqrt(b^2 + 2 sigma^2 lambda) - b without cancellation for b > 0 and small lambda
inline double root_minus(double b, double sigma, double lambda) {
  const double rt = root(b, sigma, lambda);
  return b > 0.0 ? 2.0 * sigma * sigma * lambda / (rt + b) : rt - b;
}

}  // namespace detail

struct ScaleSpeed {
  double scale = 0.0;         // S(x)
  double speed = 0.0;         // m(x)
  double log_density = 0.0;   // h(x) = int_0^x 2 b / sigma^2
};

inline ScaleSpeed scale_speed(const ModelParams& p, double x) {
  const double y = x - p.threshold;
  const double sigma = p.volatility(x);
  const double a = 2.0 * p.drift(x) / (sigma * sigma);
  ScaleSpeed out;
  out.log_density = a * y;
  out.speed = 2.0 / (sigma * sigma) * std::exp(out.log_density);
  // int_0^y exp(-a u) du = -expm1(-a y) / a
  out.scale = a == 0.0 ? y : -std::expm1(-a * y) / a;
  return out;
}

/// Total mass of the speed measure, (|b+| + b-) / (|b+| b-).
inline double speed_mass(const ErgodicParams& p) { return 1.0 / p.rate(); }

struct MinimalCoefficients {
  double kappa_plus = 0.0;
  double delta_plus = 0.0;
  double kappa_minus = 0.0;
  double delta_minus = 0.0;
};

inline MinimalCoefficients minimal_coefficients(const ModelParams& p, double lambda) {
  detail::require_positive_lambda(lambda);
  const double bp = p.b_plus, bm = p.b_minus;
  const double sp2 = p.sigma_plus * p.sigma_plus, sm2 = p.sigma_minus * p.sigma_minus;
  const double rp = detail::root(bp, p.sigma_plus, lambda);
  const double rm = detail::root(bm, p.sigma_minus, lambda);
  MinimalCoefficients k;
  k.kappa_plus = (-bm * sp2 + bp * sm2 + sm2 * rp + sp2 * rm) / (2.0 * sm2 * rp);
  k.delta_plus = (bm * sp2 - bp * sm2 + sm2 * rp - sp2 * rm) / (2.0 * sm2 * rp);
  // phi and phi' continuous at the threshold (S' = 1 on both sides)
  k.kappa_minus = (-bm * sp2 + bp * sm2 + sm2 * rp + sp2 * rm) / (2.0 * sp2 * rm);
  k.delta_minus = (bm * sp2 - bp * sm2 - sm2 * rp + sp2 * rm) / (2.0 * sp2 * rm);
  return k;
}

struct MinimalPair {
  double psi = 1.0;  // increasing solution
  double phi = 1.0;  // decreasing solution
};

/// Minimal functions evaluated with explicitly supplied matching coefficients.
/// Exposed so checks can be run against perturbed coefficients.
inline MinimalPair minimal_functions(const ModelParams& p, double lambda, double x,
                                     const MinimalCoefficients& k) {
  detail::require_positive_lambda(lambda);
  const double y = x - p.threshold;
  const double bp = p.b_plus, bm = p.b_minus;
  const double sp2 = p.sigma_plus * p.sigma_plus, sm2 = p.sigma_minus * p.sigma_minus;
  const double rp = detail::root(bp, p.sigma_plus, lambda);
  const double rm = detail::root(bm, p.sigma_minus, lambda);
  MinimalPair out;
  if (y < 0.0) {
    out.psi = std::exp(y * (-bm + rm) / sm2);
    out.phi = k.kappa_minus * std::exp(y * (-bm - rm) / sm2) + k.delta_minus * std::exp(y * (-bm + rm) / sm2);
  } else {
    out.psi = k.kappa_plus * std::exp(y * (-bp + rp) / sp2) + k.delta_plus * std::exp(y * (-bp - rp) / sp2);
    out.phi = std::exp(y * (-bp - rp) / sp2);
  }
  return out;
}

inline MinimalPair minimal_functions(const ModelParams& p, double lambda, double x) {
  return minimal_functions(p, lambda, x, minimal_coefficients(p, lambda));
}

inline double wronskian(const ModelParams& p, double lambda) {
  detail::require_positive_lambda(lambda);
  const double sp2 = p.sigma_plus * p.sigma_plus, sm2 = p.sigma_minus * p.sigma_minus;
  return detail::root_minus(p.b_minus, p.sigma_minus, lambda) / sm2 +
         detail::root_minus(-p.b_plus, p.sigma_plus, lambda) / sp2;
}

/// Laplace transform in time of the transition density p(t, x, y).
inline double resolvent(const ModelParams& p, double lambda, double x, double y) {
  const double w = wronskian(p, lambda);
  const auto at_x = minimal_functions(p, lambda, x);
  const auto at_y = minimal_functions(p, lambda, y);
  const double m = scale_speed(p, y).speed;
  return x < y ? m / w * at_x.psi * at_y.phi : m / w * at_x.phi * at_y.psi;
}

/// Laplace transforms (in the lag) of
///   G(x, t) = E_x[|X_t| 1{x X_t < 0}],   J(x, t) = P_x(x X_t < 0),
/// with levels measured from the threshold.
struct CrossingTransforms {
  double lg = 0.0;
  double lj = 0.0;
};

inline CrossingTransforms laplace_crossing(const ModelParams& p, double lambda, double x) {
  detail::require_positive_lambda(lambda);
  const double y = x - p.threshold;
  if (y == 0.0) throw std::invalid_argument("laplace_crossing: undefined at the threshold");
  const double sp2 = p.sigma_plus * p.sigma_plus, sm2 = p.sigma_minus * p.sigma_minus;
  const double rp = detail::root(p.b_plus, p.sigma_plus, lambda);
  const double rm = detail::root(p.b_minus, p.sigma_minus, lambda);
  const double w = wronskian(p, lambda);
  CrossingTransforms out;
  if (y > 0.0) {
    const double decay = std::exp(y * (-p.b_plus - rp) / sp2) / w;
    const double denom = p.b_minus + rm;
    out.lg = 2.0 * sm2 / (denom * denom) * decay;
    out.lj = 2.0 / denom * decay;
  } else {
    const double decay = std::exp(y * (-p.b_minus + rm) / sm2) / w;
    const double denom = std::abs(p.b_plus) + rp;
    out.lg = 2.0 * sp2 / (denom * denom) * decay;
    out.lj = 2.0 / denom * decay;
  }
  return out;
}

/// Stationary averages of the crossing transforms.
///
/// `elg` is the leading-order (large lambda) form c / lambda^2, which inverts
/// to c h. `elg_exact` is the full average of `lg` against the stationary
/// density; the two agree only as lambda -> infinity.
struct StationaryLaplaceAverages {
  double elg = 0.0;
  double elj = 0.0;
  double elabsg = 0.0;
  double elg_exact = 0.0;
};

inline StationaryLaplaceAverages stationary_laplace_averages(const ErgodicParams& params,
                                                             double lambda) {
  detail::require_positive_lambda(lambda);
  const double bp = -params.b_plus();
  const double bm = params.b_minus();
  const double rp = detail::root(params.b_plus(), params.sigma_plus(), lambda);
  const double rm = detail::root(bm, params.sigma_minus(), lambda);
  const double c = params.rate();
  const double sum = bp + rp + bm + rm;
  StationaryLaplaceAverages out;
  out.elg = c / (lambda * lambda);
  out.elj = 8.0 * c / (2.0 * lambda) / sum;
  out.elabsg = c / (lambda * lambda * lambda) * (-bm + rm) * (rp - bp) / sum;
  out.elg_exact = c / (lambda * lambda) * (rp + rm - bm - bp) / sum;
  return out;
}

/// Transition density of the driftless process (b+ = b- = 0): the skew
/// Brownian motion density with skewness (sigma- - sigma+)/(sigma- + sigma+)
/// mapped through x -> x / sigma(x).
inline double driftless_transition_density(const ModelParams& p, double t, double x, double y) {
  if (!(t > 0.0)) throw std::invalid_argument("driftless_transition_density: t must be positive");
  const double sx = p.volatility(x), sy = p.volatility(y);
  const double u = (x - p.threshold) / sx;
  const double v = (y - p.threshold) / sy;
  const double beta = (p.sigma_minus - p.sigma_plus) / (p.sigma_minus + p.sigma_plus);
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * t);
  const double sgn = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
  const double dens = norm * std::exp(-(u - v) * (u - v) / (2.0 * t)) +
                      beta * sgn * norm * std::exp(-(std::abs(u) + std::abs(v)) * (std::abs(u) + std::abs(v)) / (2.0 * t));
  return dens / sy;
}

/// Distribution function of the driftless process at time t from x.
inline double driftless_transition_cdf(const ModelParams& p, double t, double x, double y) {
  if (!(t > 0.0)) throw std::invalid_argument("driftless_transition_cdf: t must be positive");
  const double sx = p.volatility(x);
  const double u = (x - p.threshold) / sx;
  const double beta = (p.sigma_minus - p.sigma_plus) / (p.sigma_minus + p.sigma_plus);
  const double st = std::sqrt(t);
  auto ncdf = [](double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); };
  const double a = std::abs(u);
  if (y < p.threshold) {
    const double v = (y - p.threshold) / p.sigma_minus;  // v < 0
    // int_{-inf}^{v} phi(u - w) - beta phi(a - w) dw
    return ncdf((v - u) / st) - beta * ncdf((v - a) / st);
  }
  const double v = (y - p.threshold) / p.sigma_plus;
  const double at_zero = ncdf(-u / st) - beta * ncdf(-a / st);
  // int_0^v phi(u - w) + beta phi(a + w) dw
  return at_zero + (ncdf((v - u) / st) - ncdf(-u / st)) + beta * (ncdf((a + v) / st) - ncdf(a / st));
}

// ---------------------------------------------------------------------------
// Numerical tools.

/// Adaptive Gauss-Kronrod on [a, b], split at the supplied breakpoints.
template <class F>
double integrate(F&& f, double a, double b, std::initializer_list<double> breakpoints = {},
                 double tol = 1e-13) {
  std::vector<double> cuts{a};
  for (double c : breakpoints)
    if (c > a && c < b) cuts.push_back(c);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, cuts[i], cuts[i + 1], 20, tol);
  }
  return total;
}

/// Integral over the real line of a function decaying at least like the
/// stationary density; tails are cut at 40 stationary standard deviations on
/// each side.
template <class F>
double integrate_stationary(const ErgodicParams& params, F&& f,
                            std::initializer_list<double> breakpoints = {}) {
  const double sd_plus = params.sigma_plus() * params.sigma_plus() / (-2.0 * params.b_plus());
  const double sd_minus = params.sigma_minus() * params.sigma_minus() / (2.0 * params.b_minus());
  const double r = params.threshold();
  std::vector<double> cuts(breakpoints);
  double lo = r - 40.0 * sd_minus, hi = r + 40.0 * sd_plus;
  double total = 0.0;
  auto run = [&](double a, double b) {
    std::vector<double> pts{a};
    for (double c : cuts)
      if (c > a && c < b) pts.push_back(c);
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
      total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, pts[i], pts[i + 1], 20, 1e-13);
  };
  run(lo, r);
  run(r, hi);
  return total;
}

/// Gaver-Stehfest inversion of a Laplace transform sampled on the positive
/// real axis. `terms` must be even and at most 18; 14 is a good default in
/// double precision.
template <class F>
double laplace_invert(F&& transform, double t, int terms = 14) {
  if (!(t > 0.0)) throw std::invalid_argument("laplace_invert: t must be positive");
  if (terms <= 0 || terms % 2 != 0 || terms > 18)
    throw std::invalid_argument("laplace_invert: terms must be even and in [2, 18]");
  const int half = terms / 2;
  auto factorial = [](int n) {
    long double f = 1.0L;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
  };
  const long double ln2 = std::numbers::ln2_v<long double>;
  long double acc = 0.0L;
  for (int k = 1; k <= terms; ++k) {
    long double v = 0.0L;
    for (int j = (k + 1) / 2; j <= std::min(k, half); ++j) {
      v += std::pow(static_cast<long double>(j), half) * factorial(2 * j) /
           (factorial(half - j) * factorial(j) * factorial(j - 1) * factorial(k - j) * factorial(2 * j - k));
    }
    if ((half + k) % 2 != 0) v = -v;
    acc += v * static_cast<long double>(transform(static_cast<double>(k * ln2 / t)));
  }
  return static_cast<double>(acc * ln2 / t);
}

/// Exact stationary one-step crossing moments at lag h, by inverting the
/// exact stationary transforms:
///   eg    = E[|X_h| 1{X_0 X_h < 0}]
///   ej    = P(X_0 X_h < 0)
///   eabsg = E[|X_0 X_h| 1{X_0 X_h < 0}]
/// plus the implied long-run rates of the three local-time estimators.
struct CrossingMoments {
  double eg = 0.0;
  double ej = 0.0;
  double eabsg = 0.0;
  double rate_l = 0.0;
  double rate_lbar = 0.0;
  double rate_lhat = 0.0;
};

inline CrossingMoments exact_stationary_crossing_moments(const ErgodicParams& params, double h,
                                                         int terms = 14) {
  CrossingMoments m;
  m.eg = laplace_invert([&](double s) { return stationary_laplace_averages(params, s).elg_exact; }, h, terms);
  m.ej = laplace_invert([&](double s) { return stationary_laplace_averages(params, s).elj; }, h, terms);
  m.eabsg = laplace_invert([&](double s) { return stationary_laplace_averages(params, s).elabsg; }, h, terms);
  const double sp = params.sigma_plus(), sm = params.sigma_minus();
  m.rate_l = 2.0 * m.eg / h;
  m.rate_lbar = std::sqrt(std::numbers::pi / 2.0) * (sp + sm) / 2.0 * m.ej / std::sqrt(h);
  m.rate_lhat = 3.0 * std::sqrt(std::numbers::pi) / (2.0 * std::numbers::sqrt2) * (sp + sm) / (sp * sm) *
                m.eabsg / (h * std::sqrt(h));
  return m;
}

}  // namespace tdiff::analytic

#endif  // TDIFF_ANALYTIC_HPP
