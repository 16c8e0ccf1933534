#ifndef TDIFF_STATS_HPP
#define TDIFF_STATS_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "tdiff/model.hpp"
#include "tdiff/simulate.hpp"

namespace tdiff {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  void merge(const CompensatedSum& o) noexcept {
    add(o.sum_);
    comp_ += o.comp_;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Discrete path functionals, all on the shifted levels y = x - r:
///   Q+ = h #{k < N : y_k >= 0},   M+ = sum_{k<N} 1{y_k >= 0}(y_{k+1} - y_k),
///   Q+,1 = h sum_{k<N} y_k 1{y_k >= 0},   and the mirror sums on {y_k < 0};
///   lt_sum = sum 1{y_k y_{k+1} < 0} |y_{k+1}|, cross_prod_sum = sum y_k y_{k+1} 1{y_k y_{k+1} < 0}.
struct SufficientStats {
  std::uint64_t n_plus = 0;
  std::uint64_t n_minus = 0;
  double m_plus = 0.0;
  double m_minus = 0.0;
  double q1_plus = 0.0;
  double q1_minus = 0.0;
  double lt_sum = 0.0;
  std::uint64_t crossings = 0;
  double cross_prod_sum = 0.0;
  double x_first = 0.0;  // shifted endpoints
  double x_last = 0.0;
  std::uint64_t n_obs = 0;
  std::uint64_t zero_samples = 0;
  double h = 1.0;

  double q_plus() const noexcept { return h * static_cast<double>(n_plus); }
  double q_minus() const noexcept { return h * static_cast<double>(n_minus); }
  double horizon() const noexcept { return h * static_cast<double>(n_obs); }
  /// L_{h,N} = 2 lt_sum.
  double local_time() const noexcept { return 2.0 * lt_sum; }
  bool two_sided() const noexcept { return n_plus > 0 && n_minus > 0; }
};

/// Single-pass accumulator. Chunks of one path that share their boundary
/// observation can be accumulated separately and merged in order.
class StatsAccumulator {
 public:
  StatsAccumulator(double threshold, double h) : r_(threshold), h_(h) {
    if (!(h > 0.0)) throw std::invalid_argument("StatsAccumulator: h must be positive");
  }

  void push(double x) noexcept {
    const double y = x - r_;
    if (y == 0.0) ++zero_samples_;
    if (!started_) {
      started_ = true;
      first_ = y;
      prev_ = y;
      return;
    }
    const double dy = y - prev_;
    if (prev_ >= 0.0) {
      ++n_plus_;
      m_plus_.add(dy);
      q1_plus_.add(prev_);
    } else {
      ++n_minus_;
      m_minus_.add(dy);
      q1_minus_.add(prev_);
    }
    const double prod = prev_ * y;
    if (prod < 0.0) {
      ++crossings_;
      lt_.add(std::abs(y));
      cross_.add(prod);
    }
    prev_ = y;
    ++n_;
  }

  /// Append `next`, whose first observation must be this accumulator's last.
  void merge(const StatsAccumulator& next) {
    if (!next.started_) return;
    if (!started_) {
      *this = next;
      return;
    }
    if (next.first_ != prev_ || next.r_ != r_ || next.h_ != h_)
      throw std::invalid_argument("StatsAccumulator::merge: chunks are not contiguous");
    n_plus_ += next.n_plus_;
    n_minus_ += next.n_minus_;
    m_plus_.merge(next.m_plus_);
    m_minus_.merge(next.m_minus_);
    q1_plus_.merge(next.q1_plus_);
    q1_minus_.merge(next.q1_minus_);
    lt_.merge(next.lt_);
    cross_.merge(next.cross_);
    crossings_ += next.crossings_;
    n_ += next.n_;
    // the shared boundary sample was counted by both sides
    zero_samples_ += next.zero_samples_ - (next.first_ == 0.0 ? 1 : 0);
    prev_ = next.prev_;
  }

  std::uint64_t size() const noexcept { return started_ ? n_ + 1 : 0; }

  SufficientStats stats() const noexcept {
    SufficientStats s;
    s.n_plus = n_plus_;
    s.n_minus = n_minus_;
    s.m_plus = m_plus_.value();
    s.m_minus = m_minus_.value();
    s.q1_plus = h_ * q1_plus_.value();
    s.q1_minus = h_ * q1_minus_.value();
    s.lt_sum = lt_.value();
    s.crossings = crossings_;
    s.cross_prod_sum = cross_.value();
    s.x_first = first_;
    s.x_last = prev_;
    s.n_obs = n_;
    s.zero_samples = zero_samples_;
    s.h = h_;
    return s;
  }

 private:
  double r_;
  double h_;
  bool started_ = false;
  double first_ = 0.0;
  double prev_ = 0.0;
  std::uint64_t n_ = 0;
  std::uint64_t n_plus_ = 0;
  std::uint64_t n_minus_ = 0;
  std::uint64_t crossings_ = 0;
  std::uint64_t zero_samples_ = 0;
  CompensatedSum m_plus_, m_minus_, q1_plus_, q1_minus_, lt_, cross_;
};

inline SufficientStats sufficient_stats(std::span<const double> values, double h, double threshold) {
  if (values.size() < 2) throw std::invalid_argument("sufficient_stats: need at least two observations");
  StatsAccumulator acc(threshold, h);
  for (double x : values) acc.push(x);
  return acc.stats();
}

inline SufficientStats sufficient_stats(const PathSample& path, double threshold) {
  return sufficient_stats(path.values, path.h, threshold);
}

struct LocalTimeEstimates {
  double l = 0.0;     // 2 sum |y_{k+1}| over crossings
  double lbar = 0.0;  // renormalized crossing count
  double lhat = 0.0;  // renormalized covariation of (y^+, y^-)
};

inline LocalTimeEstimates local_time_estimators(const SufficientStats& s, const ModelParams& p) {
  const double sp = p.sigma_plus, sm = p.sigma_minus;
  const double sh = std::sqrt(s.h);
  LocalTimeEstimates e;
  e.l = s.local_time();
  e.lbar = std::sqrt(std::numbers::pi / 2.0) * (sp + sm) / 2.0 * sh * static_cast<double>(s.crossings);
  e.lhat = -(3.0 * std::sqrt(std::numbers::pi) / (2.0 * std::numbers::sqrt2)) * (sm + sp) / (sm * sp) / sh *
           s.cross_prod_sum;
  return e;
}

struct TanakaResiduals {
  double res_plus = 0.0;
  double res_minus = 0.0;
  bool has_zero_sample = false;
};

/// Residuals of the discrete Tanaka identities
///   y_N^+ - y_0^+ =  M+ + L/2,   y_N^- - y_0^- = -M- + L/2.
/// They vanish up to rounding on every path with no sample exactly at the threshold.
inline TanakaResiduals tanaka_residuals(const SufficientStats& s) {
  auto pos = [](double v) { return v > 0.0 ? v : 0.0; };
  auto neg = [](double v) { return v < 0.0 ? -v : 0.0; };
  TanakaResiduals t;
  t.res_plus = (pos(s.x_last) - pos(s.x_first)) - (s.m_plus + s.lt_sum);
  t.res_minus = (neg(s.x_last) - neg(s.x_first)) - (-s.m_minus + s.lt_sum);
  t.has_zero_sample = s.zero_samples > 0;
  return t;
}

inline TanakaResiduals tanaka_residuals(const PathSample& path, double threshold) {
  return tanaka_residuals(sufficient_stats(path, threshold));
}

inline double discrete_covariation(std::span<const double> ys, std::span<const double> zs) {
  if (ys.size() != zs.size())
    throw std::invalid_argument("discrete_covariation: sequences differ in length");
  if (ys.size() < 2) throw std::invalid_argument("discrete_covariation: need at least two points");
  CompensatedSum acc;
  for (std::size_t k = 0; k + 1 < ys.size(); ++k) acc.add((ys[k + 1] - ys[k]) * (zs[k + 1] - zs[k]));
  return acc.value();
}

}  // namespace tdiff

#endif  // TDIFF_STATS_HPP
