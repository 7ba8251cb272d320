// Simulates one Case 4 style summary dataset and compares IVW, dIVW and
// MR-EO screened dIVW on it.
#include <cstdio>

#include "divw/divw.hpp"

int main() {
  using namespace divw;
  auto cfg = sim::case_config(sim::CaseId::case4);
  cfg.dgp = sim::Dgp::summary_level;
  const sim::Simulator simulator(cfg);
  const auto data = simulator.dataset(0);

  Analyzer analyzer(data);
  const auto ivw0 = analyzer.run(Method::ivw, LambdaPolicy::none(), false);
  const auto divw0 = analyzer.run(Method::divw, LambdaPolicy::none(), false);
  const auto eo = analyzer.run(Method::divw, LambdaPolicy::mr_eo(), false);

  std::printf("true beta0 = %.3f, p = %zu\n", cfg.beta0, data.p());
  std::printf("IVW   lambda=0     %.3f (%.3f)\n", ivw0.beta_hat, ivw0.se);
  std::printf("dIVW  lambda=0     %.3f (%.3f)  effective n = %.1f\n", divw0.beta_hat, divw0.se,
              divw0.effective_sample_size);
  std::printf("dIVW  MR-EO %.2f   %.3f (%.3f)  %zu IVs\n", eo.lambda, eo.beta_hat, eo.se, eo.p_selected);
}
