// Long-run rates of the three local-time estimators against the values
// obtained by inverting the exact stationary Laplace transforms.

#include <cstdio>

#include "tdiff/analytic.hpp"
#include "tdiff/simulate.hpp"
#include "tdiff/stats.hpp"

int main() {
  const tdiff::ErgodicParams params(-0.5, 0.5, 1.0, 1.0);
  const auto k = tdiff::asymptotic_constants(params);
  std::printf("L_inf = %.6f\n%6s %24s %24s %24s\n", k.l_inf, "h", "L sim / exact", "Lbar sim / exact",
              "Lhat sim / exact");
  for (double h : {0.04, 0.25, 1.0}) {
    const tdiff::SamplingScheme scheme{h, static_cast<std::uint64_t>(2e4 / h), 64};
    const auto path = tdiff::simulate_stationary_path(params, scheme, 11);
    const auto s = tdiff::sufficient_stats(path, 0.0);
    const auto lt = tdiff::local_time_estimators(s, params);
    const auto ex = tdiff::analytic::exact_stationary_crossing_moments(params, h);
    const double t = s.horizon();
    std::printf("%6.2f %11.4f / %-11.4f %11.4f / %-11.4f %11.4f / %-11.4f\n", h, lt.l / t, ex.rate_l, lt.lbar / t,
                ex.rate_lbar, lt.lhat / t, ex.rate_lhat);
  }
}
