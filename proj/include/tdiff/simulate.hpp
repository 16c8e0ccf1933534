#ifndef TDIFF_SIMULATE_HPP
#define TDIFF_SIMULATE_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tdiff/model.hpp"
#include "tdiff/rng.hpp"

namespace tdiff {

struct SamplingScheme {
  double h = 1.0;
  std::uint64_t n_obs = 1;
  int substeps = 8;

  double horizon() const noexcept { return h * static_cast<double>(n_obs); }

  void validate() const {
    if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("SamplingScheme: h must be positive");
    if (n_obs < 1) throw std::invalid_argument("SamplingScheme: n_obs must be >= 1");
    if (substeps < 1) throw std::invalid_argument("SamplingScheme: substeps must be >= 1");
  }
};

/// Discretely observed trajectory X_0, X_h, ..., X_{Nh}.
struct PathSample {
  double t0 = 0.0;
  double h = 1.0;
  std::vector<double> values;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  int substeps = 1;

  std::uint64_t n_obs() const noexcept { return values.empty() ? 0 : values.size() - 1; }
};

/// Euler-Maruyama with step h/substeps. Calls `visit(k, x)` for every
/// observation k = 0..N (k = 0 is x0). Returns the final level.
template <class Visitor>
double simulate_observations(const ModelParams& p, double x0, const SamplingScheme& scheme,
                             RandomStream& rng, Visitor&& visit) {
  scheme.validate();
  const double dt = scheme.h / scheme.substeps;
  const double sdt = std::sqrt(dt);
  // Precompute per-regime increments; the loop is the hot path of every experiment.
  const double drift_p = p.b_plus * dt, drift_m = p.b_minus * dt;
  const double vol_p = p.sigma_plus * sdt, vol_m = p.sigma_minus * sdt;
  const double r = p.threshold;
  double x = x0;
  visit(std::uint64_t{0}, x);
  for (std::uint64_t k = 1; k <= scheme.n_obs; ++k) {
    for (int s = 0; s < scheme.substeps; ++s) {
      const double z = rng.normal();
      if (x >= r)
        x += drift_p + vol_p * z;
      else
        x += drift_m + vol_m * z;
    }
    visit(k, x);
  }
  return x;
}

inline PathSample simulate_path(const ModelParams& p, double x0, const SamplingScheme& scheme,
                                std::uint64_t seed, std::uint64_t stream = 0) {
  RandomStream rng(seed, stream);
  PathSample out;
  out.h = scheme.h;
  out.seed = seed;
  out.stream = stream;
  out.substeps = scheme.substeps;
  out.values.resize(scheme.n_obs + 1);
  simulate_observations(p, x0, scheme, rng, [&](std::uint64_t k, double x) { out.values[k] = x; });
  return out;
}

/// Path started from a stationary draw. The initial level is taken from the
/// same (seed, stream) generator before the Euler increments.
inline PathSample simulate_stationary_path(const ErgodicParams& p, const SamplingScheme& scheme,
                                           std::uint64_t seed, std::uint64_t stream = 0) {
  RandomStream rng(seed, stream);
  const double x0 = sample_stationary(p, rng);
  PathSample out;
  out.h = scheme.h;
  out.seed = seed;
  out.stream = stream;
  out.substeps = scheme.substeps;
  out.values.resize(scheme.n_obs + 1);
  simulate_observations(p, x0, scheme, rng, [&](std::uint64_t k, double x) { out.values[k] = x; });
  return out;
}

}  // namespace tdiff

#endif  // TDIFF_SIMULATE_HPP
