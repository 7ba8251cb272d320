#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <random>

#include "divw/selection.hpp"
#include "divw/simulation.hpp"
#include "test_util.hpp"

namespace divw {
using divw::testing::random_dataset;
using divw::testing::RelNear;

namespace {

SummaryDataset with_selection(const std::vector<double>& gstar, const std::vector<double>& sstar) {
  std::vector<SnpRecord> recs;
  for (std::size_t j = 0; j < gstar.size(); ++j)
    recs.push_back({"rs" + std::to_string(j), 1.0, 0.1, 0.5, 0.2, gstar[j], sstar[j]});
  return SummaryDataset(recs);
}

// 2 (p - s) / (lambda sqrt(2 pi)) exp(-lambda^2 / 2) in 50-digit arithmetic.
double bound_oracle(std::size_t p, std::size_t s, double lambda) {
  using boost::multiprecision::cpp_bin_float_50;
  const cpp_bin_float_50 l(lambda);
  const cpp_bin_float_50 pi = boost::math::constants::pi<cpp_bin_float_50>();
  const cpp_bin_float_50 v = 2 * cpp_bin_float_50(p - s) / (l * sqrt(2 * pi)) * exp(-l * l / 2);
  return static_cast<double>(v);
}

}  // namespace

TEST(Screen, Examples) {
  auto d = with_selection({3.0, 1.0}, {1.0, 1.0});
  EXPECT_EQ(screen(d, 2.0).indices, std::vector<std::size_t>{0});
  EXPECT_EQ(screen(d, 0.0).size(), 2u);
  EXPECT_EQ(screen(d, 2.0).lambda, 2.0);
}

TEST(Screen, StrictInequalityAtBoundary) {
  auto d = with_selection({2.0, -2.0, 2.5}, {1.0, 1.0, 1.0});
  EXPECT_EQ(screen(d, 2.0).indices, std::vector<std::size_t>{2});
}

TEST(Screen, ZeroSelectsAllEvenWithZeroGammaStar) {
  auto d = with_selection({0.0, 0.0}, {1.0, 1.0});
  EXPECT_EQ(screen(d, 0.0).size(), 2u);
}

TEST(Screen, Errors) {
  SummaryDataset d({SnpRecord{"a", 1, 1, 1, 1, std::nullopt, std::nullopt}});
  EXPECT_THROW(screen(d, 1.0), ConfigError);
  EXPECT_NO_THROW(screen(d, 0.0));
  EXPECT_THROW(screen(d, -1.0), ConfigError);
  EXPECT_THROW(screen(d, std::nan("")), ConfigError);
}

TEST(Screen, NestingMonotonicityProperty) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> lam(0.0, 6.0);
  for (int trial = 0; trial < 300; ++trial) {
    auto d = random_dataset(rng, 1 + trial % 150);
    double l1 = lam(rng), l2 = lam(rng);
    if (l1 > l2) std::swap(l1, l2);
    const auto s1 = screen(d, l1), s2 = screen(d, l2);
    EXPECT_LE(s2.size(), s1.size());
    EXPECT_TRUE(std::includes(s1.indices.begin(), s1.indices.end(), s2.indices.begin(), s2.indices.end()));
  }
}

TEST(KappaHat, Examples) {
  auto d1 = testing::make_dataset({{1.0, 1.0, 0.0, 1.0}, {1.0, 1.0, 0.0, 1.0}});
  EXPECT_DOUBLE_EQ(kappa_hat(d1, select_all(d1)).kappa_hat, 0.0);
  auto d2 = testing::make_dataset({{2.0, 1.0, 0.0, 1.0}});
  const auto e = kappa_hat(d2, select_all(d2));
  EXPECT_DOUBLE_EQ(e.kappa_hat, 3.0);
  EXPECT_EQ(e.p_hat, 1u);
  EXPECT_THROW(kappa_hat(d2, SelectionSet{}), DegenerateError);
}

TEST(KappaHat, EffectiveSampleSizeFromFields) {
  std::mt19937_64 rng(4);
  auto d = random_dataset(rng, 200);
  for (double l : {0.0, 0.5, 1.0, 2.5}) {
    const auto sel = screen(d, l);
    const auto e = kappa_hat(d, sel);
    EXPECT_EQ(e.p_hat, sel.size());
    EXPECT_EQ(e.effective_sample_size,
              e.kappa_hat * std::sqrt(static_cast<double>(e.p_hat)) / std::max(1.0, l * l));
  }
}

TEST(KappaHat, LambdaZeroMatchesPlainMean) {
  std::mt19937_64 rng(6);
  auto d = random_dataset(rng, 64);
  long double s = 0;
  for (const auto& r : d.records()) s += (r.gamma_hat * r.gamma_hat) / (r.se_x * r.se_x);
  EXPECT_TRUE(RelNear(kappa_hat(d, screen(d, 0.0)).kappa_hat, static_cast<double>(s / 64 - 1), 1e-13));
}

TEST(SqrtTwoLogP, Examples) {
  EXPECT_NEAR(sqrt_two_log_p(1119), 3.75, 0.005);
  EXPECT_NEAR(sqrt_two_log_p(2000), 3.90, 0.005);
  EXPECT_EQ(sqrt_two_log_p(1), 0.0);
}

TEST(NullSelectionBound, Examples) {
  EXPECT_EQ(null_selection_bound(100, 100, 2.0), 0.0);
  EXPECT_THROW(null_selection_bound(10, 2, 0.0), ConfigError);
  EXPECT_THROW(null_selection_bound(10, 11, 1.0), ConfigError);
  // At lambda = sqrt(2 ln p) the bound collapses to (p - s)/p / sqrt(pi ln p).
  const double lam = sqrt_two_log_p(1119);
  const double closed = (1099.0 / 1119.0) / std::sqrt(std::numbers::pi * std::log(1119.0));
  EXPECT_TRUE(RelNear(null_selection_bound(1119, 20, lam), closed, 1e-13));
  EXPECT_TRUE(RelNear(null_selection_bound(1119, 20, lam), bound_oracle(1119, 20, lam), 1e-13));
  EXPECT_NEAR(closed, 0.209, 0.0005);
  // The rounded threshold 3.75 sits slightly above sqrt(2 ln 1119) = 3.7470.
  EXPECT_TRUE(RelNear(null_selection_bound(1119, 20, 3.75), bound_oracle(1119, 20, 3.75), 1e-13));
  EXPECT_NEAR(null_selection_bound(1119, 20, 3.75), 0.209, 0.003);
}

TEST(NullSelectionBound, EmpiricalRateBelowBound) {
  const std::size_t p = 1119, s = 20;
  const double lam = 3.75;
  const int reps = 4000;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n01;
  int hits = 0;
  for (int r = 0; r < reps; ++r) {
    bool any = false;
    for (std::size_t j = s; j < p; ++j) any |= std::abs(n01(rng)) > lam;
    hits += any;
  }
  const double rate = static_cast<double>(hits) / reps;
  const double mcse = std::sqrt(rate * (1 - rate) / reps);
  EXPECT_LE(rate, null_selection_bound(p, s, lam) + 3 * mcse);
}

// ---------------------------------------------------------------------------
// MR-EO

namespace {

// Exposure strength identical for every SNP, selection z-scores spread out:
// dropping any SNP only loses information, so the variance is smallest at 0.
SummaryDataset equal_strength(std::size_t p) {
  std::vector<SnpRecord> recs;
  for (std::size_t j = 0; j < p; ++j) {
    const double z = 0.2 + 7.8 * static_cast<double>(j) / static_cast<double>(p - 1);
    recs.push_back({"rs" + std::to_string(j), 0.05, 0.01, 0.02, 0.01, z * 0.01, 0.01});
  }
  return SummaryDataset(recs);
}

double grid_objective(const SummaryDataset& d, double lambda, double beta) {
  const auto sel = screen(d, lambda);
  if (sel.empty()) return INFINITY;
  try {
    divw(d, sel);
    return divw_variance(d, sel, beta);
  } catch (const DegenerateError&) {
    return INFINITY;
  }
}

}  // namespace

TEST(MrEo, EqualStrengthConvergesToZero) {
  const auto d = equal_strength(500);
  const auto res = mr_eo(d);
  const double high = sqrt_two_log_p(500);
  // 400-point grid oracle at the beta used by the first O-step.
  const double beta0 = res.trace.iterations.front().beta;
  double best = INFINITY, best_lambda = -1;
  for (int i = 0; i < 400; ++i) {
    const double l = high * i / 399.0;
    const double v = grid_objective(d, l, beta0);
    if (v < best) best = v, best_lambda = l;
  }
  EXPECT_EQ(best_lambda, 0.0);
  EXPECT_LT(res.trace.final_lambda, high / 399.0);
  EXPECT_EQ(res.selection.size(), 500u);
  EXPECT_EQ(res.trace.stop_reason, MrEoStop::variance_non_decreasing);
}

TEST(MrEo, ProfileMatchesBruteForceAtEveryPiece) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    auto d = random_dataset(rng, 20 + trial * 7);
    const double high = sqrt_two_log_p(d.p());
    ScreeningVarianceProfile prof(d, high);
    const double beta = 0.3;
    for (std::size_t i = 0; i < prof.size(); ++i) {
      EXPECT_EQ(prof.selected(i), screen(d, prof.lambda(i)).size());
      const double brute = grid_objective(d, prof.lambda(i), beta);
      const double v = prof.variance(i, beta);
      if (std::isinf(brute)) {
        EXPECT_TRUE(std::isinf(v));
      } else {
        EXPECT_TRUE(RelNear(v, brute, 1e-10));
      }
    }
  }
}

TEST(MrEo, ArgminNeverWorseThanGrid) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    auto d = random_dataset(rng, 50 + trial * 5);
    const double high = sqrt_two_log_p(d.p());
    ScreeningVarianceProfile prof(d, high);
    const double beta = 0.25;
    const auto lam = prof.argmin(beta);
    ASSERT_TRUE(lam.has_value());
    const double v_opt = grid_objective(d, *lam, beta);
    for (int i = 0; i < 400; ++i) {
      const double l = high * i / 399.0;
      EXPECT_LE(v_opt, grid_objective(d, l, beta) * (1 + 1e-12));
    }
  }
}

TEST(MrEo, TraceInvariantsAndDeterminism) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 40; ++trial) {
    auto d = random_dataset(rng, 30 + trial * 10);
    MrEoOptions opt;
    opt.t_max = 1 + trial % 6;
    const auto a = mr_eo(d, opt);
    const auto b = mr_eo(d, opt);
    EXPECT_EQ(a.trace.final_lambda, b.trace.final_lambda);
    EXPECT_EQ(a.selection.indices, b.selection.indices);
    ASSERT_FALSE(a.trace.iterations.empty());
    EXPECT_LE(a.trace.iterations.size(), static_cast<std::size_t>(opt.t_max) + 1);
    double prev = INFINITY;
    double last_accepted = NAN;
    for (const auto& it : a.trace.iterations) {
      if (it.accepted) {
        EXPECT_LT(it.variance, prev);
        prev = it.variance;
        last_accepted = it.lambda;
      }
    }
    EXPECT_EQ(a.trace.final_lambda, last_accepted);
    // Never worse than the starting threshold.
    const double v0 = a.trace.iterations.front().variance;
    const auto sel = a.selection;
    EXPECT_LE(divw_variance(d, sel, divw(d, sel)), v0);
    if (a.trace.stop_reason == MrEoStop::variance_non_decreasing) {
      EXPECT_FALSE(a.trace.iterations.back().accepted);
    }
  }
}

TEST(MrEo, Errors) {
  auto d = testing::make_dataset({{1, 1, 1, 1}});
  EXPECT_THROW(mr_eo(d), ConfigError);
  auto s = with_selection({3.0}, {1.0});
  MrEoOptions bad;
  bad.t_max = 0;
  EXPECT_THROW(mr_eo(s, bad), ConfigError);
}

TEST(MrEo, FallsBackBelowDegenerateStart) {
  // Only the weakly selected SNPs carry usable exposure signal; at the top of
  // the bracket the surviving SNPs have w_hat < v_hat.
  std::vector<SnpRecord> recs;
  for (int j = 0; j < 40; ++j) {
    const bool strong_sel = j < 10;
    recs.push_back({"rs" + std::to_string(j), strong_sel ? 0.001 : 1.0, 0.1, 0.4, 0.1,
                    strong_sel ? 10.0 : 1.0, 1.0});
  }
  SummaryDataset d(recs);
  const auto res = mr_eo(d);
  EXPECT_LT(res.trace.iterations.front().lambda, sqrt_two_log_p(40));
  EXPECT_GT(res.selection.size(), 10u);
}

TEST(MrEo, NoDefinedLambdaIsDegenerate) {
  std::vector<SnpRecord> recs;
  for (int j = 0; j < 5; ++j) recs.push_back({"rs" + std::to_string(j), 0.001, 1.0, 0.4, 0.1, 3.0, 1.0});
  EXPECT_THROW(mr_eo(SummaryDataset(recs)), DegenerateError);
}

// Sparse signal (200 of 2000 SNPs carry exposure effects): screening pays
// off and the search moves below the starting threshold but stays above 0.
TEST(MrEo, SparseSignalPicksInteriorThreshold) {
  auto cfg = sim::case_config(sim::CaseId::case4);
  cfg.dgp = sim::Dgp::summary_level;
  const sim::Simulator simulator(cfg);
  for (std::size_t rep = 0; rep < 5; ++rep) {
    const auto d = simulator.dataset(rep);
    const auto res = mr_eo(d);
    EXPECT_GT(res.trace.final_lambda, 0.5);
    EXPECT_LT(res.trace.final_lambda, sqrt_two_log_p(2000));
    const auto all = select_all(d);
    EXPECT_LT(res.trace.iterations.front().variance, divw_variance(d, all, divw(d, all)));
  }
}

}  // namespace divw
