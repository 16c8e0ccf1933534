#ifndef TDIFF_MODEL_HPP
#define TDIFF_MODEL_HPP

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "tdiff/rng.hpp"

namespace tdiff {

/// Coefficients of the threshold diffusion
///   dX = b(X) dt + sigma(X) dW,
/// with b = b_plus, sigma = sigma_plus on {x >= threshold} and b_minus,
/// sigma_minus on {x < threshold}.
///
/// `ModelParams` only enforces positive volatilities, so it can also hold
/// estimator output. Use `ErgodicParams` wherever the stationary regime is
/// required.
struct ModelParams {
  double b_plus = 0.0;
  double b_minus = 0.0;
  double sigma_plus = 1.0;
  double sigma_minus = 1.0;
  double threshold = 0.0;

  static ModelParams raw(double b_plus, double b_minus, double sigma_plus, double sigma_minus,
                         double threshold = 0.0) {
    if (!(sigma_plus > 0.0) || !(sigma_minus > 0.0))
      throw std::invalid_argument("ModelParams: volatilities must be strictly positive");
    if (!std::isfinite(b_plus) || !std::isfinite(b_minus) || !std::isfinite(sigma_plus) ||
        !std::isfinite(sigma_minus) || !std::isfinite(threshold))
      throw std::invalid_argument("ModelParams: non-finite coefficient");
    return {b_plus, b_minus, sigma_plus, sigma_minus, threshold};
  }

  bool is_ergodic() const noexcept { return b_plus < 0.0 && b_minus > 0.0; }

  // {x >= threshold} owns the threshold itself.
  double drift(double x) const noexcept { return x >= threshold ? b_plus : b_minus; }
  double volatility(double x) const noexcept { return x >= threshold ? sigma_plus : sigma_minus; }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Mean-reverting parameters: b_plus < 0 < b_minus.
class ErgodicParams {
 public:
  explicit ErgodicParams(const ModelParams& p) : p_(ModelParams::raw(p.b_plus, p.b_minus, p.sigma_plus,
                                                                       p.sigma_minus, p.threshold)) {
    if (!p_.is_ergodic())
      throw std::domain_error("ErgodicParams: requires b_plus < 0 < b_minus (got b_plus=" +
                              std::to_string(p.b_plus) + ", b_minus=" + std::to_string(p.b_minus) + ")");
  }
  ErgodicParams(double b_plus, double b_minus, double sigma_plus, double sigma_minus,
                double threshold = 0.0)
      : ErgodicParams(ModelParams{b_plus, b_minus, sigma_plus, sigma_minus, threshold}) {}

  const ModelParams& params() const noexcept { return p_; }
  operator const ModelParams&() const noexcept { return p_; }  // NOLINT: intentional widening

  double b_plus() const noexcept { return p_.b_plus; }
  double b_minus() const noexcept { return p_.b_minus; }
  double sigma_plus() const noexcept { return p_.sigma_plus; }
  double sigma_minus() const noexcept { return p_.sigma_minus; }
  double threshold() const noexcept { return p_.threshold; }

  /// |b+| b- / (b- + |b+|); the recurring rate constant (= L_inf / 2).
  double rate() const noexcept {
    const double bp = -p_.b_plus;
    return bp * p_.b_minus / (p_.b_minus + bp);
  }

 private:
  ModelParams p_;
};

/// Symmetric 2x2 matrix.
struct CovMatrix2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  static CovMatrix2 diagonal(double a, double b) { return {a, 0.0, b}; }

  double trace() const noexcept { return xx + yy; }
  double det() const noexcept { return xx * yy - xy * xy; }

  double min_eigenvalue() const noexcept {
    const double half_tr = 0.5 * (xx + yy);
    const double disc = std::sqrt(0.25 * (xx - yy) * (xx - yy) + xy * xy);
    return half_tr - disc;
  }

  bool is_psd(double tol = 1e-10) const noexcept {
    return std::isfinite(xx) && std::isfinite(xy) && std::isfinite(yy) && min_eigenvalue() >= -tol;
  }

  friend bool operator==(const CovMatrix2&, const CovMatrix2&) = default;
};

/// Closed-form limits of the ergodic regime.
struct AsymptoticConstants {
  double q_inf_plus = 0.0;   // stationary P(X >= r)
  double q_inf_minus = 0.0;  // stationary P(X < r)
  double q1_inf_plus = 0.0;  // E[(X-r) 1{X >= r}]
  double q1_inf_minus = 0.0; // E[(X-r) 1{X < r}]  (<= 0)
  double l_inf = 0.0;        // a.s. limit of L_T / T
  double l1 = 0.0;           // sqrt(h) coefficient of the crossing-count estimator
  double l2 = 0.0;           // sqrt(h) coefficient of the covariation estimator
  CovMatrix2 sigma_clt;      // high-frequency CLT covariance
  double ex_plus = 0.0;      // E[(X-r)^+]
  double ex_minus = 0.0;     // E[(X-r)^-]
};

inline AsymptoticConstants asymptotic_constants(const ErgodicParams& params) {
  const double bp = -params.b_plus();  // |b+|
  const double bm = params.b_minus();
  const double sp = params.sigma_plus();
  const double sm = params.sigma_minus();
  const double total = bm + bp;
  const double c = bp * bm / total;

  AsymptoticConstants k;
  k.q_inf_plus = bm / total;
  k.q_inf_minus = bp / total;
  k.q1_inf_plus = bm * sp * sp / (2.0 * bp * total);
  k.q1_inf_minus = -bp * sm * sm / (2.0 * bm * total);
  k.l_inf = 2.0 * c;
  k.l1 = std::sqrt(std::numbers::pi / 2.0) * bp * bm / (sp + sm);
  k.l2 = -(3.0 * std::sqrt(std::numbers::pi) / (4.0 * std::numbers::sqrt2)) * c *
         (bp / sp + bm / sm + total / (sm + sp));
  const double scale = total / (bm * bp);
  k.sigma_clt = CovMatrix2::diagonal(scale * sp * sp * bp, scale * sm * sm * bm);
  k.ex_plus = k.q1_inf_plus;
  k.ex_minus = -k.q1_inf_minus;
  return k;
}

/// Stationary density (normalized speed measure) at level x.
inline double stationary_density(const ErgodicParams& params, double x) {
  const double y = x - params.threshold();
  const double c = params.rate();
  if (y >= 0.0) {
    const double sp2 = params.sigma_plus() * params.sigma_plus();
    return 2.0 / sp2 * c * std::exp(2.0 * params.b_plus() * y / sp2);
  }
  const double sm2 = params.sigma_minus() * params.sigma_minus();
  return 2.0 / sm2 * c * std::exp(2.0 * params.b_minus() * y / sm2);
}

/// One draw from the stationary law: a two-sided exponential mixture.
/// Consumes exactly one uniform and one exponential variate.
inline double sample_stationary(const ErgodicParams& params, RandomStream& rng) {
  const auto k = asymptotic_constants(params);
  const double u = rng.uniform();
  const double e = rng.exponential();
  if (u < k.q_inf_plus) {
    const double rate = -2.0 * params.b_plus() / (params.sigma_plus() * params.sigma_plus());
    return params.threshold() + e / rate;
  }
  const double rate = 2.0 * params.b_minus() / (params.sigma_minus() * params.sigma_minus());
  return params.threshold() - e / rate;
}

/// Scale of the mixed-Gaussian limit for the high-frequency error of the
/// drift estimators over a fixed horizon T, given the local time `lt`.
inline double hf_limit_scale(const ModelParams& params, double horizon, double lt) {
  if (!(horizon > 0.0)) throw std::invalid_argument("hf_limit_scale: horizon must be positive");
  if (lt < 0.0) throw std::invalid_argument("hf_limit_scale: local time must be non-negative");
  const double sp = params.sigma_plus;
  const double sm = params.sigma_minus;
  const double factor = 4.0 * std::sqrt(horizon) / (3.0 * std::sqrt(2.0 * std::numbers::pi)) *
                        (sm * sm + sp * sp) / (sm + sp);
  return std::sqrt(factor) * std::sqrt(lt);
}

}  // namespace tdiff

#endif  // TDIFF_MODEL_HPP
