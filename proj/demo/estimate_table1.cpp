// Simulate a long stationary path with the Table 1 coefficients and estimate
// the drifts and volatilities, with batch-means standard errors.

#include <cstdio>

#include "tdiff/estimators.hpp"
#include "tdiff/inference.hpp"
#include "tdiff/simulate.hpp"
#include "tdiff/stats.hpp"

int main() {
  const tdiff::ErgodicParams params(-0.01, 0.02, 0.10, 0.07);
  const tdiff::SamplingScheme scheme{1.0, 1'000'000, 8};
  const auto path = tdiff::simulate_stationary_path(params, scheme, 2024);
  const auto stats = tdiff::sufficient_stats(path, params.threshold());

  std::printf("crossings %llu, Q+/T %.4f (stationary %.4f)\n",
              static_cast<unsigned long long>(stats.crossings), stats.q_plus() / stats.horizon(),
              tdiff::asymptotic_constants(params).q_inf_plus);
  for (auto method : {tdiff::DriftMethod::gme, tdiff::DriftMethod::dmle}) {
    const auto cov = tdiff::batch_means_cov(path, params.threshold(), {}, method);
    const auto est = tdiff::attach_standard_errors(tdiff::drift_estimate(stats, method), cov,
                                                   static_cast<double>(stats.n_obs));
    std::printf("%-4s b+ = %+.5f (se %.5f)   b- = %+.5f (se %.5f)\n", tdiff::to_string(method).data(), est.b_plus,
                *est.stderr_plus, est.b_minus, *est.stderr_minus);
  }
  const auto vol = tdiff::gme_volatility(stats);
  std::printf("sigma+^2 = %.5f   sigma-^2 = %.5f\n", vol.sigma2_plus, vol.sigma2_minus);
}
