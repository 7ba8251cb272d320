#ifndef DIVW_TESTS_TEST_UTIL_HPP
#define DIVW_TESTS_TEST_UTIL_HPP

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "divw/data_model.hpp"

namespace divw::testing {

struct Rec {
  double g, sx, G, sy;
};

inline SummaryDataset make_dataset(const std::vector<Rec>& rows) {
  std::vector<SnpRecord> recs;
  for (std::size_t j = 0; j < rows.size(); ++j) {
    SnpRecord r;
    r.id = "rs" + std::to_string(j + 1);
    r.gamma_hat = rows[j].g;
    r.se_x = rows[j].sx;
    r.Gamma_hat = rows[j].G;
    r.se_y = rows[j].sy;
    recs.push_back(r);
  }
  return SummaryDataset(std::move(recs));
}

/// Random summary data with moderately strong instruments and selection
/// columns; used by the property tests.
inline SummaryDataset random_dataset(std::mt19937_64& rng, std::size_t p, double beta = 0.3) {
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> unif(0.5, 2.0);
  std::vector<SnpRecord> recs(p);
  for (std::size_t j = 0; j < p; ++j) {
    auto& r = recs[j];
    r.id = "rs" + std::to_string(j);
    // |gamma| >= 3 keeps sum(w_hat - v_hat) positive in practice
    const double g = n01(rng);
    const double gamma = std::copysign(3.0 + 2.0 * std::abs(g), g);
    r.se_x = unif(rng);
    r.se_y = unif(rng);
    r.gamma_hat = gamma + r.se_x * n01(rng);
    r.Gamma_hat = beta * gamma + r.se_y * n01(rng);
    r.se_x_star = unif(rng);
    r.gamma_star = gamma + *r.se_x_star * n01(rng);
  }
  return SummaryDataset(std::move(recs));
}

inline ::testing::AssertionResult RelNear(double a, double b, double rel) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  if (std::abs(a - b) <= rel * scale) return ::testing::AssertionSuccess();
  return ::testing::AssertionFailure() << a << " vs " << b << " differ by relative "
                                       << std::abs(a - b) / scale << " > " << rel;
}

}  // namespace divw::testing

#endif
