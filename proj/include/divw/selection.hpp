#ifndef DIVW_SELECTION_HPP
#define DIVW_SELECTION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "divw/data_model.hpp"
#include "divw/estimators.hpp"
#include "divw/numerics.hpp"

namespace divw {

/// Genome-wide significance (5e-8) threshold, rounded as is customary.
inline constexpr double kGenomeWideLambda = 5.45;

/// Minimum effective sample size for the normal approximation to be trusted.
inline constexpr double kEffectiveSampleSizeFloor = 20.0;

/// S_lambda = { j : |gamma*_j| > lambda se*_j }. lambda = 0 keeps every SNP and
/// needs no selection data.
inline SelectionSet screen(const SummaryDataset& dataset, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw ConfigError("screening threshold lambda must be a finite nonnegative number");
  if (lambda == 0.0) return select_all(dataset);
  if (!dataset.has_selection())
    throw ConfigError("screening at lambda > 0 requires selection columns (gamma_star, se_x_star) on every SNP");
  SelectionSet s;
  s.lambda = lambda;
  for (std::size_t j = 0; j < dataset.p(); ++j) {
    const auto& r = dataset[j];
    if (std::abs(*r.gamma_star) > lambda * *r.se_x_star) s.indices.push_back(j);
  }
  return s;
}

struct StrengthEstimates {
  double kappa_hat = 0.0;
  std::size_t p_hat = 0;
  double lambda = 0.0;
  double effective_sample_size = 0.0;
};

inline double effective_sample_size(double kappa, double p, double lambda) {
  return kappa * std::sqrt(p) / std::max(1.0, lambda * lambda);
}

/// Estimated average instrument strength over the selected SNPs.
inline StrengthEstimates kappa_hat(const SummaryDataset& dataset, const SelectionSet& selection) {
  if (selection.empty()) throw DegenerateError("kappa_hat: empty selection", 0.0);
  CompensatedSum z2;
  for (std::size_t j : selection.indices) {
    const auto& r = dataset[j];
    z2 += (r.gamma_hat * r.gamma_hat) / (r.se_x * r.se_x);
  }
  StrengthEstimates e;
  e.p_hat = selection.size();
  e.lambda = selection.lambda;
  e.kappa_hat = z2.value() / static_cast<double>(e.p_hat) - 1.0;
  e.effective_sample_size = effective_sample_size(e.kappa_hat, static_cast<double>(e.p_hat), e.lambda);
  return e;
}

inline double sqrt_two_log_p(std::size_t p) {
  if (p == 0) throw ConfigError("sqrt_two_log_p: p must be at least 1");
  return std::sqrt(2.0 * std::log(static_cast<double>(p)));
}

/// Upper bound on P(at least one of the p - s null SNPs passes screening).
inline double null_selection_bound(std::size_t p, std::size_t s, double lambda) {
  if (s > p) throw ConfigError("null_selection_bound: s must not exceed p");
  if (!(lambda > 0.0)) throw ConfigError("null_selection_bound: lambda must be positive");
  const double nulls = static_cast<double>(p - s);
  return 2.0 * nulls / (lambda * std::sqrt(2.0 * std::numbers::pi)) * std::exp(-0.5 * lambda * lambda);
}

// ---------------------------------------------------------------------------
// MR-EO: alternate a dIVW fit (E-step) with a 1-D minimization of the
// estimated dIVW variance over lambda (O-step).

enum class MrEoStop { variance_non_decreasing, t_max_reached };

inline std::string to_string(MrEoStop s) {
  return s == MrEoStop::variance_non_decreasing ? "variance_non_decreasing" : "t_max_reached";
}

struct MrEoIteration {
  int t = 0;
  double lambda = 0.0;
  double beta = 0.0;
  double variance = 0.0;
  bool accepted = false;
};

struct MrEoTrace {
  std::vector<MrEoIteration> iterations;
  double final_lambda = 0.0;
  MrEoStop stop_reason = MrEoStop::t_max_reached;
};

struct MrEoOptions {
  int t_max = 5;
  std::optional<double> bracket_high;  // defaults to sqrt(2 log p)
};

struct MrEoResult {
  SelectionSet selection;
  MrEoTrace trace;
};

/// The estimated dIVW variance as a function of lambda for a fixed beta.
/// S_lambda only changes when lambda crosses one of the z-scores
/// |gamma*_j| / se*_j, so the objective is piecewise constant; one
/// representative per piece (the midpoint of its part inside [0, high])
/// covers every distinct selection set.
class ScreeningVarianceProfile {
public:
  ScreeningVarianceProfile(const SummaryDataset& dataset, double high) {
    const std::size_t p = dataset.p();
    std::vector<double> z(p);
    for (std::size_t j = 0; j < p; ++j) {
      const auto& r = dataset[j];
      z[j] = std::abs(*r.gamma_star) / *r.se_x_star;
    }
    std::vector<std::size_t> order(p);
    for (std::size_t j = 0; j < p; ++j) order[j] = j;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return z[a] > z[b]; });

    // Pieces in increasing lambda. Piece k keeps the SNPs whose z exceeds the
    // k-th smallest distinct z-score (piece 0, lambda = 0, keeps all).
    std::vector<double> distinct;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
      if (distinct.empty() || z[*it] > distinct.back()) distinct.push_back(z[*it]);

    std::vector<double> reps{0.0};
    for (std::size_t k = 0; k < distinct.size() && distinct[k] < high; ++k) {
      if (k + 1 == distinct.size()) break;  // above the largest z-score nothing survives
      const double upper = std::min(distinct[k + 1], high);
      reps.push_back(0.5 * (distinct[k] + upper));
    }

    // Suffix sums over SNPs sorted by decreasing z, accumulated as lambda
    // decreases.
    const auto wt = weight_terms(dataset);
    pieces_.resize(reps.size());
    CompensatedSum a, b, d;
    std::size_t next = 0;
    for (std::size_t i = reps.size(); i-- > 0;) {
      const double lam = reps[i];
      while (next < p && (lam == 0.0 || z[order[next]] > lam)) {
        const std::size_t j = order[next++];
        a += wt.w_hat[j];
        b += wt.v_hat[j] * (wt.w_hat[j] + wt.v_hat[j]);
        d += wt.w_hat[j] - wt.v_hat[j];
      }
      pieces_[i] = {lam, next, a.value(), b.value(), d.value()};
    }
  }

  std::size_t size() const noexcept { return pieces_.size(); }
  double lambda(std::size_t i) const { return pieces_[i].lambda; }
  std::size_t selected(std::size_t i) const { return pieces_[i].count; }

  double variance(std::size_t i, double beta) const {
    const auto& pc = pieces_[i];
    if (pc.count == 0 || !(pc.d > 0.0)) return std::numeric_limits<double>::infinity();
    return (pc.a + beta * beta * pc.b) / (pc.d * pc.d);
  }

  /// Smallest lambda attaining the minimum; nullopt when every piece is
  /// degenerate.
  std::optional<double> argmin(double beta) const {
    std::optional<double> best_lambda;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      const double v = variance(i, beta);
      if (v < best) {
        best = v;
        best_lambda = pieces_[i].lambda;
      }
    }
    return best_lambda;
  }

private:
  struct Piece {
    double lambda;
    std::size_t count;
    double a;  // sum w_hat
    double b;  // sum v_hat (w_hat + v_hat)
    double d;  // sum (w_hat - v_hat)
  };
  std::vector<Piece> pieces_;
};

inline MrEoResult mr_eo(const SummaryDataset& dataset, const MrEoOptions& options = {}) {
  if (!dataset.has_selection()) throw ConfigError("MR-EO requires selection columns on every SNP");
  if (options.t_max < 1) throw ConfigError("MR-EO: t_max must be at least 1");
  const double high = options.bracket_high.value_or(sqrt_two_log_p(dataset.p()));
  if (!(high >= 0.0)) throw ConfigError("MR-EO: bracket must be nonnegative");

  const ScreeningVarianceProfile profile(dataset, high);

  struct Fit {
    double beta;
    double variance;
  };
  auto fit = [&](double lambda) -> std::optional<Fit> {
    const auto sel = screen(dataset, lambda);
    try {
      const double b = divw(dataset, sel);
      return Fit{b, divw_variance(dataset, sel, b)};
    } catch (const DegenerateError&) {
      return std::nullopt;
    }
  };

  // Start at the top of the bracket; if dIVW is undefined there, fall back to
  // the largest lambda in the bracket where it is defined.
  double lambda_t = high;
  auto current = fit(lambda_t);
  for (std::size_t i = profile.size(); !current && i-- > 0;) {
    lambda_t = profile.lambda(i);
    current = fit(lambda_t);
  }
  if (!current)
    throw DegenerateError("MR-EO: no lambda in [0, " + std::to_string(high) + "] yields a defined dIVW estimate",
                          0.0);

  MrEoTrace trace;
  double best_variance = std::numeric_limits<double>::infinity();
  double accepted_lambda = lambda_t;
  trace.stop_reason = MrEoStop::t_max_reached;
  for (int t = 0; t <= options.t_max; ++t) {
    if (t > 0) current = fit(lambda_t);
    const double v = current ? current->variance : std::numeric_limits<double>::infinity();
    const double b = current ? current->beta : 0.0;
    if (best_variance <= v) {
      trace.iterations.push_back({t, lambda_t, b, v, false});
      trace.stop_reason = MrEoStop::variance_non_decreasing;
      break;
    }
    best_variance = v;
    accepted_lambda = lambda_t;
    trace.iterations.push_back({t, lambda_t, b, v, true});
    if (t == options.t_max) break;
    const auto next = profile.argmin(b);
    if (!next) break;
    lambda_t = *next;
  }
  trace.final_lambda = accepted_lambda;
  return {screen(dataset, accepted_lambda), std::move(trace)};
}

}  // namespace divw

#endif
