#ifndef TDIFF_INFERENCE_HPP
#define TDIFF_INFERENCE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tdiff/estimators.hpp"
#include "tdiff/model.hpp"
#include "tdiff/parallel.hpp"
#include "tdiff/simulate.hpp"
#include "tdiff/stats.hpp"

namespace tdiff {

// ---------------------------------------------------------------------------
// Batch means

struct BatchSpec {
  std::size_t n_batches = 100;
  double discard_fraction = 0.0;
};

class OneSidedBatchError : public std::runtime_error {
 public:
  explicit OneSidedBatchError(std::size_t batch)
      : std::runtime_error("batch " + std::to_string(batch) + " never visits one side of the threshold"),
        batch_(batch) {}
  std::size_t batch() const noexcept { return batch_; }

 private:
  std::size_t batch_;
};

namespace detail {

struct BatchLayout {
  std::size_t start = 0;
  std::size_t length = 0;  // increments per batch
};

inline BatchLayout batch_layout(std::size_t n_increments, const BatchSpec& spec) {
  if (spec.n_batches < 2) throw std::invalid_argument("BatchSpec: need at least two batches");
  if (!(spec.discard_fraction >= 0.0 && spec.discard_fraction < 0.5))
    throw std::invalid_argument("BatchSpec: discard_fraction must lie in [0, 0.5)");
  BatchLayout b;
  b.start = static_cast<std::size_t>(std::floor(spec.discard_fraction * static_cast<double>(n_increments)));
  b.length = (n_increments - b.start) / spec.n_batches;
  if (b.length < 10)
    throw std::invalid_argument("BatchSpec: fewer than 10 observations per batch");
  return b;
}

inline CovMatrix2 scaled_covariance(const std::vector<std::array<double, 2>>& est, double scale) {
  const double n = static_cast<double>(est.size());
  double mx = 0.0, my = 0.0;
  for (const auto& e : est) {
    mx += e[0];
    my += e[1];
  }
  mx /= n;
  my /= n;
  CovMatrix2 c;
  for (const auto& e : est) {
    c.xx += (e[0] - mx) * (e[0] - mx);
    c.xy += (e[0] - mx) * (e[1] - my);
    c.yy += (e[1] - my) * (e[1] - my);
  }
  const double f = scale / (n - 1.0);
  c.xx *= f;
  c.xy *= f;
  c.yy *= f;
  return c;
}

}  // namespace detail

/// Long-run covariance of the mean of a bivariate series: batch length times
/// the covariance of the batch means.
inline CovMatrix2 batch_means_cov(std::span<const std::array<double, 2>> series, const BatchSpec& spec) {
  const auto lay = detail::batch_layout(series.size(), spec);
  std::vector<std::array<double, 2>> means(spec.n_batches, {0.0, 0.0});
  for (std::size_t b = 0; b < spec.n_batches; ++b) {
    const auto first = series.begin() + static_cast<std::ptrdiff_t>(lay.start + b * lay.length);
    for (auto it = first; it != first + static_cast<std::ptrdiff_t>(lay.length); ++it) {
      means[b][0] += (*it)[0];
      means[b][1] += (*it)[1];
    }
    means[b][0] /= static_cast<double>(lay.length);
    means[b][1] /= static_cast<double>(lay.length);
  }
  return detail::scaled_covariance(means, static_cast<double>(lay.length));
}

/// Batch-means estimate of the sqrt(N)-CLT covariance of a path estimator.
/// `estimator` maps the SufficientStats of one batch to a pair; it may throw
/// OneSidedPathError, which is reported with the offending batch index.
template <class Estimator>
CovMatrix2 batch_means_cov(std::span<const double> values, double h, double threshold, const BatchSpec& spec,
                           Estimator&& estimator) {
  if (values.size() < 2) throw std::invalid_argument("batch_means_cov: path too short");
  const auto lay = detail::batch_layout(values.size() - 1, spec);
  std::vector<std::array<double, 2>> est(spec.n_batches);
  for (std::size_t b = 0; b < spec.n_batches; ++b) {
    const auto chunk = values.subspan(lay.start + b * lay.length, lay.length + 1);
    try {
      est[b] = estimator(sufficient_stats(chunk, h, threshold));
    } catch (const OneSidedPathError&) {
      throw OneSidedBatchError(b);
    }
  }
  return detail::scaled_covariance(est, static_cast<double>(lay.length));
}

inline CovMatrix2 batch_means_cov(const PathSample& path, double threshold, const BatchSpec& spec,
                                  DriftMethod method) {
  return batch_means_cov(path.values, path.h, threshold, spec, [method](const SufficientStats& s) {
    const auto e = drift_estimate(s, method);
    return std::array<double, 2>{e.b_plus, e.b_minus};
  });
}

// ---------------------------------------------------------------------------
// Lag-truncated stationary autocovariance by Monte Carlo

enum class GammaFunctional { drift_q, vol_v, lt_l, lt_lbar, lt_lhat };

inline std::string_view to_string(GammaFunctional f) {
  switch (f) {
    case GammaFunctional::drift_q: return "drift_q";
    case GammaFunctional::vol_v: return "vol_v";
    case GammaFunctional::lt_l: return "lt_l";
    case GammaFunctional::lt_lbar: return "lt_lbar";
    case GammaFunctional::lt_lhat: return "lt_lhat";
  }
  return "?";
}

inline GammaFunctional parse_gamma_functional(std::string_view s) {
  for (auto f : {GammaFunctional::drift_q, GammaFunctional::vol_v, GammaFunctional::lt_l, GammaFunctional::lt_lbar,
                 GammaFunctional::lt_lhat})
    if (to_string(f) == s) return f;
  throw std::invalid_argument("unknown functional '" + std::string(s) + "'");
}

/// How the linearized functional is centered.
///  plug_in: stationary moments estimated from the same Monte Carlo run.
///  closed_form: the closed-form limits (Q+∞, L∞, ...), with the local-time
///               moment taken as E[g] = c h.
enum class Centering { plug_in, closed_form };

struct GammaSpec {
  double h = 1.0;
  GammaFunctional functional = GammaFunctional::drift_q;
  std::size_t lag_cap = 50;
  std::size_t replicates = 10000;
  std::uint64_t seed = 1;
  int substeps = 8;
  Centering centering = Centering::plug_in;
  unsigned threads = 1;
};

struct GammaEstimate {
  CovMatrix2 matrix;
  std::size_t lag_cap = 0;
  std::size_t mc_replicates = 0;
  std::array<double, 2> mean{0.0, 0.0};     // E[f] before centering
  std::array<double, 2> mean_se{0.0, 0.0};  // its Monte Carlo standard error
};

namespace detail {

// Per-step features of a transition (x, y), levels shifted.
enum Feature { kL, kOccP, kOccM, kMomP, kMomM, kCross, kProd, kFeatures };

inline void transition_features(double x, double y, double h, double* out) {
  const bool plus = x >= 0.0;
  const double prod = x * y;
  const bool cross = prod < 0.0;
  out[kL] = cross ? 2.0 * std::abs(y) : 0.0;
  out[kOccP] = plus ? h : 0.0;
  out[kOccM] = plus ? 0.0 : h;
  out[kMomP] = plus ? h * x : 0.0;
  out[kMomM] = plus ? 0.0 : h * x;
  out[kCross] = cross ? 1.0 : 0.0;
  out[kProd] = cross ? prod : 0.0;
}

}  // namespace detail

inline GammaEstimate mc_gamma(const ErgodicParams& params, const GammaSpec& spec) {
  using namespace detail;
  if (spec.replicates < 100) throw std::invalid_argument("mc_gamma: need at least 100 replicates");
  if (!(spec.h > 0.0)) throw std::invalid_argument("mc_gamma: h must be positive");
  const std::size_t steps = spec.lag_cap + 1;
  const std::size_t stride = steps * kFeatures;
  std::vector<double> feat(spec.replicates * stride);
  const SamplingScheme scheme{spec.h, steps, spec.substeps};
  const double r = params.threshold();

  parallel_for(spec.replicates, spec.threads, [&](std::uint64_t rep) {
    RandomStream rng(spec.seed, rep);
    const double x0 = sample_stationary(params, rng);
    double* out = feat.data() + rep * stride;
    double prev = 0.0;
    simulate_observations(params, x0, scheme, rng, [&](std::uint64_t k, double x) {
      const double y = x - r;
      if (k > 0) transition_features(prev, y, spec.h, out + (k - 1) * kFeatures);
      prev = y;
    });
  });

  // Stationary means of the features.
  std::array<double, kFeatures> mu{};
  for (std::size_t i = 0; i < feat.size(); ++i) mu[i % kFeatures] += feat[i];
  for (auto& m : mu) m /= static_cast<double>(spec.replicates * steps);
  if (spec.centering == Centering::closed_form) {
    // crossing count and product keep their plug-in means: no closed form at fixed h
    const auto k = asymptotic_constants(params);
    mu[kL] = k.l_inf * spec.h;
    mu[kOccP] = k.q_inf_plus * spec.h;
    mu[kOccM] = k.q_inf_minus * spec.h;
    mu[kMomP] = k.q1_inf_plus * spec.h;
    mu[kMomM] = k.q1_inf_minus * spec.h;
  }

  const double h = spec.h;
  const double sp = params.sigma_plus(), sm = params.sigma_minus();
  auto functional = [&](const double* z) -> std::array<double, 2> {
    switch (spec.functional) {
      case GammaFunctional::drift_q: {
        const double dl = z[kL] - mu[kL];
        const double fp = -0.5 * (dl / mu[kOccP] - mu[kL] * (z[kOccP] - mu[kOccP]) / (mu[kOccP] * mu[kOccP]));
        const double fm = 0.5 * (dl / mu[kOccM] - mu[kL] * (z[kOccM] - mu[kOccM]) / (mu[kOccM] * mu[kOccM]));
        return {fp, fm};
      }
      case GammaFunctional::vol_v: {
        const double dl = z[kL] - mu[kL];
        auto side = [&](int occ, int mom, double sign) {
          const double q0 = mu[occ], q1 = mu[mom];
          return sign *
                 (dl * q1 / (q0 * q0) + mu[kL] * (z[mom] - q1) / (q0 * q0) -
                  2.0 * mu[kL] * q1 * (z[occ] - q0) / (q0 * q0 * q0));
        };
        return {side(kOccP, kMomP, 1.0), side(kOccM, kMomM, -1.0)};
      }
      case GammaFunctional::lt_l:
        return {(z[kL] - mu[kL]) / h, 0.0};
      case GammaFunctional::lt_lbar:
        return {std::sqrt(std::numbers::pi / 2.0) * (sp + sm) / 2.0 * (z[kCross] - mu[kCross]) / std::sqrt(h), 0.0};
      case GammaFunctional::lt_lhat:
        return {-(3.0 * std::sqrt(std::numbers::pi) / (2.0 * std::numbers::sqrt2)) * (sp + sm) / (sp * sm) *
                    (z[kProd] - mu[kProd]) / (h * std::sqrt(h)),
                0.0};
    }
    return {0.0, 0.0};
  };

  // Evaluate f on every step and take its mean.
  std::vector<std::array<double, 2>> f(spec.replicates * steps);
  std::array<double, 2> fbar{0.0, 0.0};
  for (std::size_t i = 0; i < f.size(); ++i) {
    f[i] = functional(feat.data() + i * kFeatures);
    fbar[0] += f[i][0];
    fbar[1] += f[i][1];
  }
  fbar[0] /= static_cast<double>(f.size());
  fbar[1] /= static_cast<double>(f.size());

  // Mean standard error from per-replicate averages (replicates are independent).
  std::array<double, 2> se{0.0, 0.0};
  for (std::size_t rep = 0; rep < spec.replicates; ++rep) {
    std::array<double, 2> a{0.0, 0.0};
    for (std::size_t k = 0; k < steps; ++k) {
      a[0] += f[rep * steps + k][0];
      a[1] += f[rep * steps + k][1];
    }
    for (int c = 0; c < 2; ++c) {
      const double d = a[c] / static_cast<double>(steps) - fbar[c];
      se[c] += d * d;
    }
  }
  for (int c = 0; c < 2; ++c)
    se[c] = std::sqrt(se[c] / (static_cast<double>(spec.replicates) - 1.0) / static_cast<double>(spec.replicates));

  for (auto& v : f) {
    v[0] -= fbar[0];
    v[1] -= fbar[1];
  }

  // Autocovariance at each lag, averaged over every pair at that lag.
  CovMatrix2 gamma;
  for (std::size_t lag = 0; lag <= spec.lag_cap; ++lag) {
    double cxx = 0.0, cxy = 0.0, cyx = 0.0, cyy = 0.0;
    for (std::size_t rep = 0; rep < spec.replicates; ++rep) {
      const auto* row = f.data() + rep * steps;
      for (std::size_t i = 0; i + lag < steps; ++i) {
        cxx += row[i][0] * row[i + lag][0];
        cxy += row[i][0] * row[i + lag][1];
        cyx += row[i][1] * row[i + lag][0];
        cyy += row[i][1] * row[i + lag][1];
      }
    }
    const double n = static_cast<double>(spec.replicates * (steps - lag));
    if (lag == 0) {
      gamma.xx += cxx / n;
      gamma.xy += cxy / n;
      gamma.yy += cyy / n;
    } else {
      gamma.xx += 2.0 * cxx / n;
      gamma.xy += (cxy + cyx) / n;
      gamma.yy += 2.0 * cyy / n;
    }
  }

  GammaEstimate out;
  out.matrix = gamma;
  out.lag_cap = spec.lag_cap;
  out.mc_replicates = spec.replicates;
  out.mean = fbar;
  out.mean_se = se;
  return out;
}

// ---------------------------------------------------------------------------
// Normality diagnostic

/// Asymptotic Kolmogorov survival function P(K > x), series truncated at 100 terms.
inline double kolmogorov_sf(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.18) return 1.0;  // series does not converge usefully; true value > 1 - 1e-9
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1 ? term : -term);
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

struct NormalityResult {
  double ks_stat = 0.0;
  double ks_p = 0.0;
  double mean = 0.0;
  double variance = 0.0;
};

/// One-sample KS test against the normal law with the sample mean and variance.
inline NormalityResult normality_diagnostic(std::span<const double> samples) {
  if (samples.size() < 50) throw std::invalid_argument("normality_diagnostic: need at least 50 samples");
  const double n = static_cast<double>(samples.size());
  NormalityResult r;
  for (double v : samples) r.mean += v;
  r.mean /= n;
  for (double v : samples) r.variance += (v - r.mean) * (v - r.mean);
  r.variance /= n - 1.0;
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double sd = std::sqrt(r.variance);
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = sd > 0.0 ? 0.5 * std::erfc(-(sorted[i] - r.mean) / (sd * std::numbers::sqrt2)) : 0.5;
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  r.ks_stat = d;
  r.ks_p = kolmogorov_sf(std::sqrt(n) * d);
  return r;
}

}  // namespace tdiff

#endif  // TDIFF_INFERENCE_HPP
