#ifndef TDIFF_ESTIMATORS_HPP
#define TDIFF_ESTIMATORS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "tdiff/model.hpp"
#include "tdiff/stats.hpp"

namespace tdiff {

enum class DriftMethod { gme, dmle };

inline std::string_view to_string(DriftMethod m) { return m == DriftMethod::gme ? "gme" : "dmle"; }

inline DriftMethod parse_drift_method(std::string_view s) {
  if (s == "gme") return DriftMethod::gme;
  if (s == "dmle") return DriftMethod::dmle;
  throw std::invalid_argument("unknown drift method '" + std::string(s) + "'");
}

/// Raised when a path never visits one side of the threshold, so the
/// occupation in the denominator is zero.
class OneSidedPathError : public std::runtime_error {
 public:
  OneSidedPathError(bool missing_plus, bool missing_minus)
      : std::runtime_error(message(missing_plus, missing_minus)),
        missing_plus_(missing_plus), missing_minus_(missing_minus) {}
  bool missing_plus() const noexcept { return missing_plus_; }
  bool missing_minus() const noexcept { return missing_minus_; }

 private:
  static std::string message(bool p, bool m) {
    std::string s = "one-sided path: zero occupation on";
    if (p) s += " the plus side";
    if (p && m) s += " and";
    if (m) s += " the minus side";
    return s;
  }
  bool missing_plus_;
  bool missing_minus_;
};

struct DriftEstimate {
  double b_plus = 0.0;
  double b_minus = 0.0;
  DriftMethod method = DriftMethod::gme;
  std::optional<double> stderr_plus;
  std::optional<double> stderr_minus;
};

struct VolEstimate {
  double sigma2_plus = 0.0;
  double sigma2_minus = 0.0;
};

namespace detail {
inline void require_two_sided(const SufficientStats& s) {
  if (!s.two_sided()) throw OneSidedPathError(s.n_plus == 0, s.n_minus == 0);
}
}  // namespace detail

/// b+ = -L / (2 Q+),  b- = L / (2 Q-).
inline DriftEstimate gme_drift(const SufficientStats& s) {
  detail::require_two_sided(s);
  const double l = s.local_time();
  return {-l / (2.0 * s.q_plus()), l / (2.0 * s.q_minus()), DriftMethod::gme, {}, {}};
}

/// b± = M± / Q±.
inline DriftEstimate dmle_drift(const SufficientStats& s) {
  detail::require_two_sided(s);
  return {s.m_plus / s.q_plus(), s.m_minus / s.q_minus(), DriftMethod::dmle, {}, {}};
}

inline DriftEstimate drift_estimate(const SufficientStats& s, DriftMethod m) {
  return m == DriftMethod::gme ? gme_drift(s) : dmle_drift(s);
}

/// sigma±^2 = ± L Q±,1 / (Q±)^2.
/// Stationary limits L/T -> 2|b+| Q+, Q+,1/T -> Q+ sigma+^2 / (2|b+|) give
/// sigma+^2 exactly; an extra factor 1/2 would converge to sigma^2 / 2.
inline VolEstimate gme_volatility(const SufficientStats& s) {
  detail::require_two_sided(s);
  const double l = s.local_time();
  const double qp = s.q_plus(), qm = s.q_minus();
  return {l * s.q1_plus / (qp * qp), -l * s.q1_minus / (qm * qm)};
}

/// stderr± = sqrt(cov±± / scale), with scale = N for fixed-lag asymptotics
/// and scale = T for high-frequency asymptotics.
inline DriftEstimate attach_standard_errors(DriftEstimate est, const CovMatrix2& cov, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("attach_standard_errors: scale must be positive");
  if (!cov.is_psd()) throw std::invalid_argument("attach_standard_errors: covariance is not PSD");
  est.stderr_plus = std::sqrt(std::max(cov.xx, 0.0) / scale);
  est.stderr_minus = std::sqrt(std::max(cov.yy, 0.0) / scale);
  return est;
}

/// Everything reported for one data set.
struct EstimateReport {
  DriftEstimate drift;
  std::optional<VolEstimate> vol;
  std::uint64_t n_obs = 0;
  double h = 0.0;
};

namespace detail {
inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}
inline std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string("nan"); }
}  // namespace detail

inline void write_key_value(std::ostream& os, const EstimateReport& r) {
  os << "method = " << to_string(r.drift.method) << '\n'
     << "b_plus = " << detail::fmt(r.drift.b_plus) << '\n'
     << "b_minus = " << detail::fmt(r.drift.b_minus) << '\n'
     << "sigma2_plus = " << (r.vol ? detail::fmt(r.vol->sigma2_plus) : "nan") << '\n'
     << "sigma2_minus = " << (r.vol ? detail::fmt(r.vol->sigma2_minus) : "nan") << '\n'
     << "stderr_plus = " << detail::fmt(r.drift.stderr_plus) << '\n'
     << "stderr_minus = " << detail::fmt(r.drift.stderr_minus) << '\n'
     << "n_obs = " << r.n_obs << '\n'
     << "h = " << detail::fmt(r.h) << '\n';
}

inline constexpr std::string_view kReportCsvHeader =
    "method,b_plus,b_minus,sigma2_plus,sigma2_minus,stderr_plus,stderr_minus,n_obs,h";

inline void write_csv_row(std::ostream& os, const EstimateReport& r) {
  os << to_string(r.drift.method) << ',' << detail::fmt(r.drift.b_plus) << ',' << detail::fmt(r.drift.b_minus)
     << ',' << (r.vol ? detail::fmt(r.vol->sigma2_plus) : "nan") << ','
     << (r.vol ? detail::fmt(r.vol->sigma2_minus) : "nan") << ',' << detail::fmt(r.drift.stderr_plus) << ','
     << detail::fmt(r.drift.stderr_minus) << ',' << r.n_obs << ',' << detail::fmt(r.h) << '\n';
}

}  // namespace tdiff

#endif  // TDIFF_ESTIMATORS_HPP
