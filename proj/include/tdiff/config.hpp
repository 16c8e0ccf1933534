#ifndef TDIFF_CONFIG_HPP
#define TDIFF_CONFIG_HPP

// Reader for the experiment configuration files: a strict subset of TOML
// with [section] headers and `key = value` lines, where a value is a number,
// a double-quoted string, true/false, or a flat array of numbers.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tdiff/model.hpp"
#include "tdiff/simulate.hpp"

namespace tdiff {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ConfigValue = std::variant<double, std::string, bool, std::vector<double>>;
using ConfigTable = std::map<std::string, std::map<std::string, ConfigValue>>;

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_number(std::string_view s, int line) {
  s = trim(s);
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError("line " + std::to_string(line) + ": not a number: '" + std::string(s) + "'");
  return v;
}

inline std::string strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return std::string(line.substr(0, i));
  }
  return std::string(line);
}

inline ConfigValue parse_value(std::string_view v, int line) {
  v = trim(v);
  if (v.empty()) throw ConfigError("line " + std::to_string(line) + ": missing value");
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"')
      throw ConfigError("line " + std::to_string(line) + ": unterminated string");
    return std::string(v.substr(1, v.size() - 2));
  }
  if (v == "true") return true;
  if (v == "false") return false;
  if (v.front() == '[') {
    if (v.back() != ']') throw ConfigError("line " + std::to_string(line) + ": unterminated array");
    std::vector<double> out;
    std::string_view body = trim(v.substr(1, v.size() - 2));
    while (!body.empty()) {
      const auto comma = body.find(',');
      const auto item = trim(body.substr(0, comma));
      if (!item.empty()) out.push_back(parse_number(item, line));
      if (comma == std::string_view::npos) break;
      body = body.substr(comma + 1);
    }
    return out;
  }
  return parse_number(v, line);
}

}  // namespace detail

inline ConfigTable parse_config(std::istream& in) {
  ConfigTable table;
  std::string section;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string stripped = detail::strip_comment(raw);
    const auto line = detail::trim(stripped);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": bad section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      if (section.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty section name");
      table[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    if (section.empty()) throw ConfigError("line " + std::to_string(line_no) + ": key outside of a section");
    const std::string key(detail::trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    auto& sec = table[section];
    if (sec.count(key)) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    sec[key] = detail::parse_value(line.substr(eq + 1), line_no);
  }
  return table;
}

inline ConfigTable parse_config(std::string_view text) {
  std::istringstream is{std::string(text)};
  return parse_config(is);
}

enum class ExperimentKind { mse, clt, lt_bias, hf_rate, analytic_check };

inline std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::mse: return "mse";
    case ExperimentKind::clt: return "clt";
    case ExperimentKind::lt_bias: return "lt_bias";
    case ExperimentKind::hf_rate: return "hf_rate";
    case ExperimentKind::analytic_check: return "analytic_check";
  }
  return "?";
}

inline ExperimentKind parse_experiment_kind(std::string_view s) {
  for (auto k : {ExperimentKind::mse, ExperimentKind::clt, ExperimentKind::lt_bias, ExperimentKind::hf_rate,
                 ExperimentKind::analytic_check})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown experiment kind '" + std::string(s) + "'");
}

struct ExperimentConfig {
  ModelParams model = ModelParams{-0.01, 0.02, 0.10, 0.07, 0.0};
  SamplingScheme sampling{1.0, 1000, 8};
  std::optional<double> x0;  // empty: stationary start
  ExperimentKind kind = ExperimentKind::mse;
  std::vector<std::uint64_t> n_grid{1000, 10000, 100000};
  std::vector<double> h_grid{0.01, 0.02, 0.04, 0.08};
  std::size_t replicates = 1000;
  double horizon = 10.0;
  int ref_factor = 64;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
};

namespace detail {

inline double get_number(const ConfigValue& v, const std::string& key) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  throw ConfigError("'" + key + "' must be a number");
}

inline std::uint64_t get_count(const ConfigValue& v, const std::string& key) {
  const double d = get_number(v, key);
  if (d < 0.0 || d != std::floor(d) || d > 9.007199254740992e15)
    throw ConfigError("'" + key + "' must be a non-negative integer");
  return static_cast<std::uint64_t>(d);
}

inline std::string get_string(const ConfigValue& v, const std::string& key) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  throw ConfigError("'" + key + "' must be a string");
}

inline std::vector<double> get_array(const ConfigValue& v, const std::string& key) {
  if (const auto* a = std::get_if<std::vector<double>>(&v)) {
    if (a->empty()) throw ConfigError("'" + key + "' must not be empty");
    return *a;
  }
  throw ConfigError("'" + key + "' must be an array");
}

}  // namespace detail

/// Builds a validated config; unknown sections or keys are errors.
inline ExperimentConfig experiment_config(const ConfigTable& table) {
  using namespace detail;
  static const std::map<std::string, std::set<std::string>> allowed{
      {"model", {"b_plus", "b_minus", "sigma_plus", "sigma_minus", "threshold"}},
      {"sampling", {"h", "n_obs", "substeps", "x0"}},
      {"experiment", {"kind", "n_grid", "h_grid", "replicates", "horizon", "ref_factor", "seed"}},
      {"output", {"dir"}},
  };
  for (const auto& [sec, keys] : table) {
    const auto it = allowed.find(sec);
    if (it == allowed.end()) throw ConfigError("unknown section [" + sec + "]");
    for (const auto& [key, _] : keys)
      if (!it->second.count(key)) throw ConfigError("unknown key '" + key + "' in [" + sec + "]");
  }
  ExperimentConfig c;
  auto section = [&](const char* name) -> const std::map<std::string, ConfigValue>* {
    const auto it = table.find(name);
    return it == table.end() ? nullptr : &it->second;
  };
  if (const auto* m = section("model")) {
    for (const auto& [k, v] : *m) {
      const double d = get_number(v, k);
      if (k == "b_plus") c.model.b_plus = d;
      else if (k == "b_minus") c.model.b_minus = d;
      else if (k == "sigma_plus") c.model.sigma_plus = d;
      else if (k == "sigma_minus") c.model.sigma_minus = d;
      else c.model.threshold = d;
    }
    try {
      c.model = ModelParams::raw(c.model.b_plus, c.model.b_minus, c.model.sigma_plus, c.model.sigma_minus,
                                 c.model.threshold);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (const auto* s = section("sampling")) {
    for (const auto& [k, v] : *s) {
      if (k == "h") c.sampling.h = get_number(v, k);
      else if (k == "n_obs") c.sampling.n_obs = get_count(v, k);
      else if (k == "substeps") c.sampling.substeps = static_cast<int>(get_count(v, k));
      else if (std::holds_alternative<std::string>(v)) {
        if (std::get<std::string>(v) != "stationary") throw ConfigError("x0 must be a number or \"stationary\"");
        c.x0.reset();
      } else {
        c.x0 = get_number(v, k);
      }
    }
    try {
      c.sampling.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (const auto* e = section("experiment")) {
    for (const auto& [k, v] : *e) {
      if (k == "kind") c.kind = parse_experiment_kind(get_string(v, k));
      else if (k == "n_grid") {
        c.n_grid.clear();
        for (double d : get_array(v, k)) c.n_grid.push_back(get_count(d, k));
      } else if (k == "h_grid") {
        c.h_grid = get_array(v, k);
        for (double h : c.h_grid)
          if (!(h > 0.0)) throw ConfigError("h_grid entries must be positive");
      } else if (k == "replicates") c.replicates = get_count(v, k);
      else if (k == "horizon") c.horizon = get_number(v, k);
      else if (k == "ref_factor") c.ref_factor = static_cast<int>(get_count(v, k));
      else c.seed = get_count(v, k);
    }
  }
  if (const auto* o = section("output")) c.out_dir = get_string(o->at("dir"), "dir");
  for (auto n : c.n_grid)
    if (n < 1) throw ConfigError("n_grid entries must be >= 1");
  if (c.replicates < 1) throw ConfigError("replicates must be >= 1");
  if (!(c.horizon > 0.0)) throw ConfigError("horizon must be positive");
  if (c.ref_factor < 1) throw ConfigError("ref_factor must be >= 1");
  return c;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return experiment_config(parse_config(in));
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Canonical text of the resolved configuration; its hash tags every output.
inline std::string canonical_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "model " << c.model.b_plus << ' ' << c.model.b_minus << ' ' << c.model.sigma_plus << ' '
     << c.model.sigma_minus << ' ' << c.model.threshold << '\n'
     << "sampling " << c.sampling.h << ' ' << c.sampling.n_obs << ' ' << c.sampling.substeps << ' ';
  if (c.x0)
    os << *c.x0;
  else
    os << "stationary";
  os << '\n'
     << "experiment " << to_string(c.kind) << " n";
  for (auto n : c.n_grid) os << ' ' << n;
  os << " h";
  for (auto h : c.h_grid) os << ' ' << h;
  os << " R " << c.replicates << " T " << c.horizon << " ref " << c.ref_factor << " seed "
     << (c.seed ? std::to_string(*c.seed) : std::string("-")) << '\n';
  return os.str();
}

}  // namespace tdiff

#endif  // TDIFF_CONFIG_HPP
