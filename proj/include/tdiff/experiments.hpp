#ifndef TDIFF_EXPERIMENTS_HPP
#define TDIFF_EXPERIMENTS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdiff/analytic.hpp"
#include "tdiff/config.hpp"
#include "tdiff/estimators.hpp"
#include "tdiff/inference.hpp"
#include "tdiff/model.hpp"
#include "tdiff/parallel.hpp"
#include "tdiff/simulate.hpp"
#include "tdiff/stats.hpp"

namespace tdiff {

inline constexpr std::string_view kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Shared plumbing

struct RunContext {
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

inline std::uint64_t require_seed(const ExperimentConfig& c, std::optional<std::uint64_t> override_seed) {
  if (override_seed) return *override_seed;
  if (c.seed) return *c.seed;
  throw ConfigError("no seed given: set [experiment] seed or pass --seed");
}

inline std::string metadata_line(const ExperimentConfig& c, std::uint64_t seed) {
  std::ostringstream os;
  os << "# config-hash=" << std::hex << std::setw(16) << std::setfill('0') << fnv1a(canonical_text(c)) << std::dec
     << ", seed=" << seed << ", version=" << kVersion;
  return os.str();
}

/// CSV table held as text cells; written with the metadata trailer.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void write(std::ostream& os, const std::string& metadata) const {
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
      os << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    os << metadata << '\n';
  }
};

inline std::string cell(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}
inline std::string cell(std::uint64_t v) { return std::to_string(v); }
inline std::string cell(std::string_view v) { return std::string(v); }

inline void write_table(const std::filesystem::path& file, const CsvTable& t, const std::string& metadata) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write '" + file.string() + "'");
  t.write(out, metadata);
  if (!out) throw std::runtime_error("write failed for '" + file.string() + "'");
}

/// Ordinary least-squares slope of y on x.
inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

/// Replicate-level drift estimates on independent paths.
struct ReplicateDrift {
  bool ok = false;
  DriftEstimate gme;
  DriftEstimate dmle;
};

inline std::vector<ReplicateDrift> replicate_drift(const ModelParams& p, std::optional<double> x0,
                                                   const SamplingScheme& scheme, std::size_t replicates,
                                                   std::uint64_t seed, std::uint64_t stream_base,
                                                   unsigned threads) {
  std::optional<ErgodicParams> ergodic;
  if (!x0) ergodic.emplace(p);
  std::vector<ReplicateDrift> out(replicates);
  parallel_for(replicates, threads, [&](std::uint64_t rep) {
    RandomStream rng(seed, stream_base + rep);
    const double start = x0 ? *x0 : sample_stationary(*ergodic, rng);
    StatsAccumulator acc(p.threshold, scheme.h);
    simulate_observations(p, start, scheme, rng, [&](std::uint64_t, double x) { acc.push(x); });
    const auto s = acc.stats();
    if (!s.two_sided()) return;
    out[rep] = {true, gme_drift(s), dmle_drift(s)};
  });
  return out;
}

// ---------------------------------------------------------------------------
// MSE sweep

struct MseRow {
  std::uint64_t n = 0;
  DriftMethod method = DriftMethod::gme;
  bool plus = true;
  double mse = 0.0;
  double bias = 0.0;
  double variance = 0.0;
  std::uint64_t failures = 0;
};

struct MseResult {
  std::vector<MseRow> rows;
  /// log10 MSE against log10 N, per (method, side): gme+, gme-, dmle+, dmle-.
  std::array<double, 4> slopes{};
};

inline MseResult run_mse_sweep(const ExperimentConfig& c, const RunContext& ctx) {
  MseResult res;
  std::vector<std::vector<double>> log_mse(4);
  std::vector<double> log_n;
  for (std::size_t g = 0; g < c.n_grid.size(); ++g) {
    const std::uint64_t n = c.n_grid[g];
    SamplingScheme scheme = c.sampling;
    scheme.n_obs = n;
    const auto reps = replicate_drift(c.model, c.x0, scheme, c.replicates, ctx.seed,
                                      static_cast<std::uint64_t>(g) << 32, ctx.threads);
    std::uint64_t failures = 0;
    for (const auto& r : reps) failures += r.ok ? 0 : 1;
    log_n.push_back(std::log10(static_cast<double>(n)));
    int slot = 0;
    for (DriftMethod m : {DriftMethod::gme, DriftMethod::dmle}) {
      for (bool plus : {true, false}) {
        const double truth = plus ? c.model.b_plus : c.model.b_minus;
        double sum = 0.0, sum2 = 0.0, k = 0.0;
        for (const auto& r : reps) {
          if (!r.ok) continue;
          const auto& e = m == DriftMethod::gme ? r.gme : r.dmle;
          const double err = (plus ? e.b_plus : e.b_minus) - truth;
          sum += err;
          sum2 += err * err;
          k += 1.0;
        }
        MseRow row{n, m, plus, 0.0, 0.0, 0.0, failures};
        if (k > 0.0) {
          row.mse = sum2 / k;
          row.bias = sum / k;
          row.variance = std::max(0.0, row.mse - row.bias * row.bias);
        } else {
          row.mse = row.bias = row.variance = std::numeric_limits<double>::quiet_NaN();
        }
        log_mse[slot++].push_back(std::log10(row.mse));
        res.rows.push_back(row);
      }
    }
  }
  if (log_n.size() >= 2)
    for (int s = 0; s < 4; ++s) res.slopes[s] = ols_slope(log_n, log_mse[s]);
  return res;
}

inline CsvTable to_table(const MseResult& r) {
  CsvTable t{{"N", "method", "side", "mse", "bias", "variance", "failures"}, {}};
  for (const auto& row : r.rows)
    t.rows.push_back({cell(row.n), cell(to_string(row.method)), row.plus ? "plus" : "minus", cell(row.mse),
                      cell(row.bias), cell(row.variance), cell(row.failures)});
  return t;
}

// ---------------------------------------------------------------------------
// CLT check

struct CltRow {
  std::uint64_t n = 0;
  bool plus = true;
  NormalityResult diag;
};

struct CltCross {
  std::uint64_t n = 0;
  double correlation = 0.0;
  double z = 0.0;  // Fisher z statistic of the plus/minus correlation
};

struct CltResult {
  std::vector<CltRow> rows;
  std::vector<CltCross> cross;
  std::vector<std::uint64_t> failures;
};

inline CltResult run_clt_check(const ExperimentConfig& c, const RunContext& ctx) {
  CltResult res;
  for (std::size_t g = 0; g < c.n_grid.size(); ++g) {
    const std::uint64_t n = c.n_grid[g];
    SamplingScheme scheme = c.sampling;
    scheme.n_obs = n;
    const auto reps = replicate_drift(c.model, c.x0, scheme, c.replicates, ctx.seed,
                                      static_cast<std::uint64_t>(g) << 32, ctx.threads);
    std::vector<double> zp, zm;
    const double root_n = std::sqrt(static_cast<double>(n));
    std::uint64_t failures = 0;
    for (const auto& r : reps) {
      if (!r.ok) {
        ++failures;
        continue;
      }
      zp.push_back(root_n * (r.gme.b_plus - c.model.b_plus));
      zm.push_back(root_n * (r.gme.b_minus - c.model.b_minus));
    }
    res.failures.push_back(failures);
    if (zp.size() < 50) throw std::runtime_error("clt: fewer than 50 two-sided replicates at N=" + std::to_string(n));
    const auto dp = normality_diagnostic(zp);
    const auto dm = normality_diagnostic(zm);
    res.rows.push_back({n, true, dp});
    res.rows.push_back({n, false, dm});
    double cov = 0.0;
    for (std::size_t i = 0; i < zp.size(); ++i) cov += (zp[i] - dp.mean) * (zm[i] - dm.mean);
    cov /= static_cast<double>(zp.size()) - 1.0;
    const double rho = cov / std::sqrt(dp.variance * dm.variance);
    res.cross.push_back({n, rho, std::atanh(rho) * std::sqrt(static_cast<double>(zp.size()) - 3.0)});
  }
  return res;
}

inline CsvTable to_table(const CltResult& r) {
  CsvTable t{{"N", "side", "ks_stat", "ks_p", "emp_var"}, {}};
  for (const auto& row : r.rows)
    t.rows.push_back({cell(row.n), row.plus ? "plus" : "minus", cell(row.diag.ks_stat), cell(row.diag.ks_p),
                      cell(row.diag.variance)});
  return t;
}

// ---------------------------------------------------------------------------
// Local-time bias in the lag

enum class LtEstimator { l, lbar, lhat };

inline std::string_view to_string(LtEstimator e) {
  return e == LtEstimator::l ? "L" : (e == LtEstimator::lbar ? "Lbar" : "Lhat");
}

struct LtBiasRow {
  double h = 0.0;
  LtEstimator estimator = LtEstimator::l;
  double mean_rate = 0.0;  // estimator / (h N)
  double rate_se = 0.0;
  double bias = 0.0;       // mean_rate - L_inf
};

struct LtFit {
  LtEstimator estimator = LtEstimator::l;
  double coeff = 0.0;  // weighted least squares of bias on sqrt(h), through the origin
  double coeff_se = 0.0;
};

struct LtBiasResult {
  std::vector<LtBiasRow> rows;
  std::array<LtFit, 3> fits{};
  double l_inf = 0.0;
};

inline LtBiasResult run_lt_bias(const ExperimentConfig& c, const RunContext& ctx) {
  const ErgodicParams params(c.model);
  const double l_inf = asymptotic_constants(params).l_inf;
  const std::size_t reps = std::max<std::size_t>(c.replicates, 2);
  LtBiasResult res;
  res.l_inf = l_inf;
  for (std::size_t g = 0; g < c.h_grid.size(); ++g) {
    const double h = c.h_grid[g];
    const auto n = static_cast<std::uint64_t>(std::llround(c.horizon / h / static_cast<double>(reps)));
    if (n < 1) throw ConfigError("lt_bias: horizon too short for the h grid and replicate count");
    const SamplingScheme scheme{h, n, c.sampling.substeps};
    std::vector<std::array<double, 3>> rates(reps);
    parallel_for(reps, ctx.threads, [&](std::uint64_t rep) {
      RandomStream rng(ctx.seed, (static_cast<std::uint64_t>(g) << 32) + rep);
      const double x0 = sample_stationary(params, rng);
      StatsAccumulator acc(params.threshold(), h);
      simulate_observations(params, x0, scheme, rng, [&](std::uint64_t, double x) { acc.push(x); });
      const auto s = acc.stats();
      const auto lt = local_time_estimators(s, params);
      const double t = s.horizon();
      rates[rep] = {lt.l / t, lt.lbar / t, lt.lhat / t};
    });
    for (int e = 0; e < 3; ++e) {
      double m = 0.0, v = 0.0;
      for (const auto& r : rates) m += r[e];
      m /= static_cast<double>(reps);
      for (const auto& r : rates) v += (r[e] - m) * (r[e] - m);
      v /= static_cast<double>(reps) - 1.0;
      res.rows.push_back({h, static_cast<LtEstimator>(e), m, std::sqrt(v / static_cast<double>(reps)), m - l_inf});
    }
  }
  for (int e = 0; e < 3; ++e) {
    double swx = 0.0, sww = 0.0;
    for (const auto& row : res.rows) {
      if (static_cast<int>(row.estimator) != e) continue;
      const double w = 1.0 / (row.rate_se * row.rate_se);
      const double x = std::sqrt(row.h);
      swx += w * x * row.bias;
      sww += w * x * x;
    }
    res.fits[e] = {static_cast<LtEstimator>(e), swx / sww, 1.0 / std::sqrt(sww)};
  }
  return res;
}

inline CsvTable to_table(const LtBiasResult& r) {
  CsvTable t{{"h", "estimator", "mean_rate", "bias", "fitted_sqrt_h_coeff", "rate_se", "coeff_se"}, {}};
  for (const auto& row : r.rows) {
    const auto& fit = r.fits[static_cast<int>(row.estimator)];
    t.rows.push_back({cell(row.h), cell(to_string(row.estimator)), cell(row.mean_rate), cell(row.bias),
                      cell(fit.coeff), cell(row.rate_se), cell(fit.coeff_se)});
  }
  return t;
}

// ---------------------------------------------------------------------------
// High-frequency rate of the discretized MLE over a fixed horizon

struct HfRateRow {
  std::uint64_t n = 0;
  bool plus = true;
  double sd_rescaled = 0.0;  // sd of N^{1/4} (b_N - b_ref)
  double sd_raw = 0.0;
};

struct HfRateResult {
  std::vector<HfRateRow> rows;
  std::uint64_t n_ref = 0;
  std::uint64_t failures = 0;
};

inline HfRateResult run_hf_rate(const ExperimentConfig& c, const RunContext& ctx) {
  std::vector<std::uint64_t> grid = c.n_grid;
  std::sort(grid.begin(), grid.end());
  const std::uint64_t n_ref = static_cast<std::uint64_t>(c.ref_factor) * grid.back();
  for (auto n : grid)
    if (n_ref % n != 0) throw ConfigError("hf_rate: every N must divide ref_factor * max N");
  std::optional<ErgodicParams> ergodic;
  if (!c.x0) ergodic.emplace(c.model);
  const double h_ref = c.horizon / static_cast<double>(n_ref);
  const SamplingScheme fine{h_ref, n_ref, c.sampling.substeps};

  struct Rep {
    bool ok = false;
    std::vector<std::array<double, 2>> dev;  // b_N - b_ref per grid entry
  };
  std::vector<Rep> reps(c.replicates);
  parallel_for(c.replicates, ctx.threads, [&](std::uint64_t rep) {
    RandomStream rng(ctx.seed, rep);
    const double x0 = c.x0 ? *c.x0 : sample_stationary(*ergodic, rng);
    std::vector<StatsAccumulator> acc;
    std::vector<std::uint64_t> stride;
    for (auto n : grid) {
      acc.emplace_back(c.model.threshold, c.horizon / static_cast<double>(n));
      stride.push_back(n_ref / n);
    }
    StatsAccumulator ref(c.model.threshold, h_ref);
    simulate_observations(c.model, x0, fine, rng, [&](std::uint64_t k, double x) {
      ref.push(x);
      for (std::size_t j = 0; j < acc.size(); ++j)
        if (k % stride[j] == 0) acc[j].push(x);
    });
    const auto sref = ref.stats();
    if (!sref.two_sided()) return;
    const auto bref = dmle_drift(sref);
    Rep out;
    out.ok = true;
    for (auto& a : acc) {
      const auto s = a.stats();
      if (!s.two_sided()) return;
      const auto b = dmle_drift(s);
      out.dev.push_back({b.b_plus - bref.b_plus, b.b_minus - bref.b_minus});
    }
    reps[rep] = std::move(out);
  });

  HfRateResult res;
  res.n_ref = n_ref;
  for (const auto& r : reps) res.failures += r.ok ? 0 : 1;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    for (int side = 0; side < 2; ++side) {
      std::vector<double> d;
      for (const auto& r : reps)
        if (r.ok) d.push_back(r.dev[j][side]);
      double m = 0.0, v = 0.0;
      for (double x : d) m += x;
      m /= static_cast<double>(d.size());
      for (double x : d) v += (x - m) * (x - m);
      v = d.size() > 1 ? v / (static_cast<double>(d.size()) - 1.0) : 0.0;
      const double raw = std::sqrt(v);
      res.rows.push_back({grid[j], side == 0, std::pow(static_cast<double>(grid[j]), 0.25) * raw, raw});
    }
  }
  return res;
}

inline CsvTable to_table(const HfRateResult& r) {
  CsvTable t{{"N", "side", "sd_rescaled"}, {}};
  for (const auto& row : r.rows) t.rows.push_back({cell(row.n), row.plus ? "plus" : "minus", cell(row.sd_rescaled)});
  return t;
}

// ---------------------------------------------------------------------------
// Analytic self-check

struct AnalyticCheck {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct AnalyticCheckOptions {
  /// Applied to every set of matching coefficients before use. Identity by default.
  std::function<analytic::MinimalCoefficients(analytic::MinimalCoefficients)> perturb;
  std::uint64_t seed = 7;
};

namespace checks {

inline ModelParams random_ergodic(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> drift(0.05, 1.5), vol(0.3, 2.0);
  return ModelParams{-drift(gen), drift(gen), vol(gen), vol(gen), 0.0};
}

// Relative residual of (1/2) s^2 u'' + b u' - lambda u at x, central differences.
template <class U>
double ode_residual(const ModelParams& p, double lambda, double x, U&& u) {
  const double step = 1e-4;
  const double u0 = u(x), up = u(x + step), um = u(x - step);
  const double d1 = (up - um) / (2.0 * step);
  const double d2 = (up - 2.0 * u0 + um) / (step * step);
  const double s = p.volatility(x), b = p.drift(x);
  const double terms[3] = {0.5 * s * s * d2, b * d1, -lambda * u0};
  return std::abs(terms[0] + terms[1] + terms[2]) /
         (std::abs(terms[0]) + std::abs(terms[1]) + std::abs(terms[2]));
}

// Mismatch of value and first derivative across the threshold, relative.
template <class U>
double interface_residual(const ModelParams& p, U&& u) {
  const double r = p.threshold;
  const double e = 1e-5;
  const double at = u(r);  // plus-side branch owns r
  const double left = u(std::nextafter(r, -1e300));
  const double d_right = (-3.0 * at + 4.0 * u(r + e) - u(r + 2.0 * e)) / (2.0 * e);
  const double d_left = (3.0 * left - 4.0 * u(r - e) + u(r - 2.0 * e)) / (2.0 * e);
  return std::max(std::abs(at - left) / std::abs(at),
                  std::abs(d_right - d_left) / std::max(std::abs(d_right), std::abs(d_left)));
}

}  // namespace checks

inline std::vector<AnalyticCheck> run_analytic_check(const ModelParams& model,
                                                     const AnalyticCheckOptions& opt = {}) {
  using namespace analytic;
  const ErgodicParams params(model);
  const auto k = asymptotic_constants(params);
  const double r = params.threshold();
  std::vector<AnalyticCheck> out;
  auto add = [&](std::string name, double measured, double tol) {
    out.push_back({std::move(name), measured, tol, std::isfinite(measured) && measured <= tol});
  };
  auto coeffs = [&](const ModelParams& p, double lambda) {
    auto c = minimal_coefficients(p, lambda);
    return opt.perturb ? opt.perturb(c) : c;
  };

  std::mt19937_64 gen(opt.seed);
  std::vector<ModelParams> param_sets{model};
  for (int i = 0; i < 5; ++i) param_sets.push_back(checks::random_ergodic(gen));

  {  // resolvent normalization: lambda * int r(lambda, x, y) dy = 1
    double worst = 0.0;
    for (double lambda : {0.5, 1.0, 2.0})
      for (double dx : {-1.0, 0.0, 1.0}) {
        const double x = r + dx;
        const double total = integrate_stationary(
            params, [&](double y) { return resolvent(model, lambda, x, y); }, {x});
        worst = std::max(worst, std::abs(lambda * total - 1.0));
      }
    add("resolvent_normalization", worst, 1e-6);
  }
  {  // minimal functions solve (A - lambda) u = 0 on each side and glue at the threshold
    double worst = 0.0;
    for (const auto& p : param_sets)
      for (double lambda : {0.5, 1.0, 2.0}) {
        const auto c = coeffs(p, lambda);
        auto psi = [&](double x) { return minimal_functions(p, lambda, x, c).psi; };
        auto phi = [&](double x) { return minimal_functions(p, lambda, x, c).phi; };
        for (double dx : {-1.0, 1.0}) {
          worst = std::max(worst, checks::ode_residual(p, lambda, p.threshold + dx, psi));
          worst = std::max(worst, checks::ode_residual(p, lambda, p.threshold + dx, phi));
        }
        worst = std::max({worst, checks::interface_residual(p, psi), checks::interface_residual(p, phi)});
      }
    add("minimal_ode_residual", worst, 1e-5);
  }
  {  // kappa + delta = 1 on both sides
    double worst = 0.0;
    std::uniform_real_distribution<double> lam(0.01, 10.0);
    for (int i = 0; i < 50; ++i) {
      const auto p = checks::random_ergodic(gen);
      const auto c = coeffs(p, lam(gen));
      worst = std::max({worst, std::abs(c.kappa_plus + c.delta_plus - 1.0),
                        std::abs(c.kappa_minus + c.delta_minus - 1.0)});
    }
    add("kappa_delta_sum", worst, 1e-12);
  }
  {
    const double lambda = 1e-6;
    const double limit = (params.b_minus() - params.b_plus()) / (params.b_minus() * -params.b_plus());
    add("wronskian_small_lambda", std::abs(wronskian(model, lambda) / lambda / limit - 1.0), 1e-3);
  }
  {  // W > 0 on a log grid; measured is -min W so that "<= 0" passes
    double min_w = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 80; ++i) min_w = std::min(min_w, wronskian(model, std::pow(10.0, -6.0 + 0.1 * i)));
    add("wronskian_positive", -min_w, 0.0);
  }
  {  // W = (psi' phi - psi phi') / S' at x = r +- 1
    double worst = 0.0;
    const double e = 1e-5;
    for (double lambda : {0.5, 1.0, 2.0}) {
      const double w = wronskian(model, lambda);
      for (double dx : {-1.0, 1.0}) {
        const double x = r + dx;
        const auto m0 = minimal_functions(model, lambda, x);
        const auto mp = minimal_functions(model, lambda, x + e);
        const auto mm = minimal_functions(model, lambda, x - e);
        const double dpsi = (mp.psi - mm.psi) / (2.0 * e), dphi = (mp.phi - mm.phi) / (2.0 * e);
        const double s_prime = std::exp(-scale_speed(model, x).log_density);
        worst = std::max(worst, std::abs((dpsi * m0.phi - m0.psi * dphi) / s_prime / w - 1.0));
      }
    }
    add("wronskian_finite_difference", worst, 1e-5);
  }
  {  // driftless density integrates to one
    ModelParams flat = model;
    flat.b_plus = flat.b_minus = 0.0;
    double worst = 0.0;
    const double smax = std::max(flat.sigma_plus, flat.sigma_minus);
    for (double t : {0.5, 2.0})
      for (double dx : {-1.0, 0.0, 1.0}) {
        const double x = r + dx;
        const double span = std::abs(dx) + 40.0 * smax * std::sqrt(t);
        const double total = integrate([&](double y) { return driftless_transition_density(flat, t, x, y); },
                                       r - span, r + span, {r, x});
        worst = std::max(worst, std::abs(total - 1.0));
      }
    add("driftless_density_normalization", worst, 1e-8);
  }
  add("stationary_density_normalization",
      std::abs(integrate_stationary(params, [&](double x) { return stationary_density(params, x); }) - 1.0), 1e-9);
  {  // occupation moments against quadrature of the stationary density
    const double q1p = integrate_stationary(params, [&](double x) {
      return x >= r ? (x - r) * stationary_density(params, x) : 0.0;
    });
    const double q1m = integrate_stationary(params, [&](double x) {
      return x < r ? (x - r) * stationary_density(params, x) : 0.0;
    });
    add("first_moment_occupations", std::max(std::abs(q1p - k.q1_inf_plus), std::abs(q1m - k.q1_inf_minus)), 1e-8);
  }
  {  // Gaver-Stehfest on the displayed stationary average of L G returns c t
    double worst = 0.0;
    for (double t : {0.25, 1.0, 4.0}) {
      const double v = laplace_invert([&](double s) { return stationary_laplace_averages(params, s).elg; }, t);
      worst = std::max(worst, std::abs(v - k.l_inf * t / 2.0));
    }
    add("laplace_invert_elg", worst, 1e-6);
  }
  {  // closed-form stationary averages against quadrature of the one-point transforms
    double worst_j = 0.0, worst_g = 0.0, worst_abs = 0.0;
    for (double lambda : {0.5, 1.0, 2.0}) {
      const auto avg = stationary_laplace_averages(params, lambda);
      auto stat = [&](auto&& f) {
        return integrate_stationary(params, [&](double x) {
          return x == r ? 0.0 : stationary_density(params, x) * f(x);
        });
      };
      const double ej = stat([&](double x) { return laplace_crossing(model, lambda, x).lj; });
      const double eg = stat([&](double x) { return laplace_crossing(model, lambda, x).lg; });
      const double ea = stat([&](double x) { return std::abs(x - r) * laplace_crossing(model, lambda, x).lg; });
      worst_j = std::max(worst_j, std::abs(ej / avg.elj - 1.0));
      worst_g = std::max(worst_g, std::abs(eg / avg.elg_exact - 1.0));
      worst_abs = std::max(worst_abs, std::abs(ea / avg.elabsg - 1.0));
    }
    add("stationary_average_lj", worst_j, 1e-8);
    add("stationary_average_lg_exact", worst_g, 1e-8);
    add("stationary_average_abs_lg", worst_abs, 1e-8);
  }
  {  // r(x, y) / m(y) is symmetric
    double worst = 0.0;
    std::uniform_real_distribution<double> level(-2.0, 2.0);
    for (int i = 0; i < 20; ++i) {
      const double x = r + level(gen), y = r + level(gen);
      const double a = resolvent(model, 1.0, x, y) / scale_speed(model, y).speed;
      const double b = resolvent(model, 1.0, y, x) / scale_speed(model, x).speed;
      worst = std::max(worst, std::abs(a / b - 1.0));
    }
    add("resolvent_symmetry", worst, 1e-12);
  }
  return out;
}

inline bool all_pass(const std::vector<AnalyticCheck>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

inline CsvTable to_table(const std::vector<AnalyticCheck>& checks) {
  CsvTable t{{"check", "measured", "tolerance", "pass"}, {}};
  for (const auto& c : checks)
    t.rows.push_back({c.name, cell(c.measured), cell(c.tolerance), c.pass ? "true" : "false"});
  return t;
}

}  // namespace tdiff

#endif  // TDIFF_EXPERIMENTS_HPP
