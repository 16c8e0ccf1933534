// tdiff: simulate, estimate and run experiments for the threshold diffusion.
//
// Exit codes: 0 success, 1 acceptance failure, 2 degenerate data, 3 input error.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tdiff/config.hpp"
#include "tdiff/estimators.hpp"
#include "tdiff/experiments.hpp"
#include "tdiff/inference.hpp"
#include "tdiff/simulate.hpp"
#include "tdiff/stats.hpp"

namespace fs = std::filesystem;
using namespace tdiff;

namespace {

enum Exit : int { kOk = 0, kAcceptance = 1, kDegenerate = 2, kInput = 3 };

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned threads = 0;
};

ExperimentConfig load(const Common& c) {
  return c.config.empty() ? ExperimentConfig{} : load_experiment_config(c.config);
}

fs::path out_dir(const Common& c, const ExperimentConfig& cfg) { return c.out.empty() ? fs::path(cfg.out_dir) : fs::path(c.out); }

void write_path_csv(std::ostream& os, const PathSample& p) {
  os << "t,x\n" << std::setprecision(17);
  for (std::size_t k = 0; k < p.values.size(); ++k)
    os << p.t0 + static_cast<double>(k) * p.h << ',' << p.values[k] << '\n';
}

int cmd_simulate(const Common& c) {
  const auto cfg = load(c);
  const std::uint64_t seed = require_seed(cfg, c.seed);
  PathSample path;
  if (cfg.x0) {
    path = simulate_path(cfg.model, *cfg.x0, cfg.sampling, seed);
  } else {
    if (!cfg.model.is_ergodic())
      throw InputError("stationary start needs b_plus < 0 < b_minus; set [sampling] x0");
    path = simulate_stationary_path(ErgodicParams(cfg.model), cfg.sampling, seed);
  }
  const fs::path file = out_dir(c, cfg) / "path.csv";
  fs::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write '" + file.string() + "'");
  write_path_csv(out, path);
  out << metadata_line(cfg, seed) << '\n';
  if (!out) throw std::runtime_error("write failed for '" + file.string() + "'");
  const auto s = sufficient_stats(path, cfg.model.threshold);
  std::cout << "wrote " << file.string() << '\n'
            << "n_obs = " << path.n_obs() << '\n'
            << "h = " << path.h << '\n'
            << "crossings = " << s.crossings << '\n';
  return kOk;
}

double parse_cell(std::string_view cell, std::size_t line) {
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r' || cell.back() == '\t')) cell.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
    throw InputError("line " + std::to_string(line) + ": not a number: '" + std::string(cell) + "'");
  return v;
}

struct CsvPath {
  std::vector<double> t;
  std::vector<double> x;
};

CsvPath read_path_csv(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw InputError("cannot open '" + file + "'");
  CsvPath p;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty() || line[0] == '#') continue;
    if (no == 1 && line.rfind("t,x", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw InputError("line " + std::to_string(no) + ": expected 't,x'");
    p.t.push_back(parse_cell(std::string_view(line).substr(0, comma), no));
    p.x.push_back(parse_cell(std::string_view(line).substr(comma + 1), no));
  }
  if (p.x.size() < 2) throw InputError("need at least two observations");
  return p;
}

int cmd_estimate(const std::string& file, double threshold, std::optional<double> h_override, std::size_t batches) {
  const auto data = read_path_csv(file);
  const std::size_t n = data.x.size() - 1;
  double h = 0.0;
  if (h_override) {
    h = *h_override;
    if (!(h > 0.0)) throw InputError("--h must be positive");
  } else {
    h = (data.t.back() - data.t.front()) / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k)
      if (std::abs(data.t[k + 1] - data.t[k] - h) > 1e-9 * std::max(1.0, std::abs(h)))
        throw InputError("time column is not equally spaced (pass --h to override)");
    if (!(h > 0.0)) throw InputError("time column must be increasing");
  }
  const auto stats = sufficient_stats(data.x, h, threshold);
  const auto vol = gme_volatility(stats);
  const BatchSpec spec{std::min(batches, n / 10), 0.0};
  for (DriftMethod m : {DriftMethod::gme, DriftMethod::dmle}) {
    EstimateReport rep{drift_estimate(stats, m), vol, stats.n_obs, h};
    if (spec.n_batches >= 2) {
      try {
        const auto cov = batch_means_cov(data.x, h, threshold, spec, [m](const SufficientStats& s) {
          const auto e = drift_estimate(s, m);
          return std::array<double, 2>{e.b_plus, e.b_minus};
        });
        rep.drift = attach_standard_errors(rep.drift, cov, static_cast<double>(n));
      } catch (const OneSidedBatchError& e) {
        std::cout << "# standard errors unavailable: " << e.what() << '\n';
      }
    }
    write_key_value(std::cout, rep);
    if (!(rep.drift.b_plus < 0.0 && rep.drift.b_minus > 0.0))
      std::cout << "# warning: point estimate is outside the ergodic region b_plus < 0 < b_minus\n";
    std::cout << '\n';
  }
  return kOk;
}

int cmd_experiment(const std::string& kind_name, const Common& c) {
  auto cfg = load(c);
  cfg.kind = parse_experiment_kind(kind_name);
  const std::uint64_t seed = cfg.kind == ExperimentKind::analytic_check && !c.seed && !cfg.seed
                                 ? std::uint64_t{7}
                                 : require_seed(cfg, c.seed);
  const RunContext ctx{seed, resolve_threads(c.threads)};
  const std::string meta = metadata_line(cfg, seed);
  const fs::path file = out_dir(c, cfg) / (std::string(to_string(cfg.kind)) + ".csv");
  int code = kOk;
  switch (cfg.kind) {
    case ExperimentKind::mse: {
      const auto r = run_mse_sweep(cfg, ctx);
      write_table(file, to_table(r), meta);
      std::cout << "log-log MSE slopes: gme+ " << r.slopes[0] << ", gme- " << r.slopes[1] << ", dmle+ "
                << r.slopes[2] << ", dmle- " << r.slopes[3] << '\n';
      for (std::size_t i = 0; i + 3 < r.rows.size(); i += 4) {
        std::cout << "N=" << r.rows[i].n << ": sign(MSE gme - MSE dmle) plus "
                  << (r.rows[i].mse < r.rows[i + 2].mse ? "-" : "+") << ", minus "
                  << (r.rows[i + 1].mse < r.rows[i + 3].mse ? "-" : "+") << '\n';
      }
      break;
    }
    case ExperimentKind::clt: {
      const auto r = run_clt_check(cfg, ctx);
      write_table(file, to_table(r), meta);
      for (const auto& x : r.cross)
        std::cout << "N=" << x.n << ": plus/minus correlation " << x.correlation << " (z = " << x.z << ")\n";
      break;
    }
    case ExperimentKind::lt_bias: {
      const auto r = run_lt_bias(cfg, ctx);
      write_table(file, to_table(r), meta);
      for (const auto& f : r.fits)
        std::cout << to_string(f.estimator) << ": sqrt(h) coefficient " << f.coeff << " +- " << f.coeff_se << '\n';
      break;
    }
    case ExperimentKind::hf_rate: {
      const auto r = run_hf_rate(cfg, ctx);
      write_table(file, to_table(r), meta);
      std::cout << "reference grid N_ref = " << r.n_ref << ", one-sided replicates skipped: " << r.failures << '\n';
      break;
    }
    case ExperimentKind::analytic_check: {
      const auto checks = run_analytic_check(cfg.model);
      write_table(file, to_table(checks), meta);
      for (const auto& ch : checks)
        std::cout << (ch.pass ? "PASS " : "FAIL ") << ch.name << " measured=" << ch.measured
                  << " tol=" << ch.tolerance << '\n';
      code = all_pass(checks) ? kOk : kAcceptance;
      break;
    }
  }
  std::cout << "wrote " << file.string() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tdiff: threshold diffusion simulation and estimation"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "experiment configuration file");
    sub->add_option("--seed", common.seed, "64-bit seed (overrides the config)");
    sub->add_option("--out", common.out, "output directory (overrides the config)");
    sub->add_option("--threads", common.threads, "worker threads (default: $TDIFF_THREADS, else all cores)");
  };

  auto* sim = app.add_subcommand("simulate", "simulate one path and write it as t,x CSV");
  add_common(sim);

  std::string input;
  double threshold = 0.0;
  std::optional<double> h_override;
  std::size_t batches = 100;
  auto* est = app.add_subcommand("estimate", "estimate drift and volatility from a t,x CSV");
  est->set_help_flag("--help", "print this help message and exit");  // frees -h / --h for the lag
  est->add_option("input", input, "path CSV")->required();
  est->add_option("--threshold", threshold, "threshold level r");
  est->add_option("--h", h_override, "observation lag (default: from the time column)");
  est->add_option("--batches", batches, "batch count for standard errors");

  std::string kind;
  auto* exp = app.add_subcommand("experiment", "run an experiment suite");
  exp->add_option("kind", kind, "mse | clt | lt_bias | hf_rate | analytic_check")->required();
  add_common(exp);

  auto* chk = app.add_subcommand("check", "analytic self-check; exit 0 iff every check passes");
  add_common(chk);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }

  try {
    if (*sim) return cmd_simulate(common);
    if (*est) return cmd_estimate(input, threshold, h_override, batches);
    if (*exp) return cmd_experiment(kind, common);
    if (*chk) return cmd_experiment("analytic_check", common);
  } catch (const OneSidedPathError& e) {
    std::cerr << "degenerate data: " << e.what() << '\n';
    return kDegenerate;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kInput;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const std::domain_error& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInput;
  }
  return kOk;
}
