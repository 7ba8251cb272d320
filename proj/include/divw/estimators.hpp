#ifndef DIVW_ESTIMATORS_HPP
#define DIVW_ESTIMATORS_HPP

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <vector>

#include "divw/data_model.hpp"
#include "divw/numerics.hpp"

namespace divw {

/// Instruments retained at a screening threshold; sorted record positions.
struct SelectionSet {
  std::vector<std::size_t> indices;
  double lambda = 0.0;

  std::size_t size() const noexcept { return indices.size(); }
  bool empty() const noexcept { return indices.empty(); }
};

inline SelectionSet select_all(const SummaryDataset& dataset) {
  SelectionSet s;
  s.indices.resize(dataset.p());
  std::iota(s.indices.begin(), s.indices.end(), std::size_t{0});
  return s;
}

/// w_hat = gamma_hat^2 / se_y^2 and v_hat = se_x^2 / se_y^2 per SNP.
struct WeightTerms {
  std::vector<double> w_hat;
  std::vector<double> v_hat;
};

inline WeightTerms weight_terms(const SummaryDataset& dataset) {
  WeightTerms t;
  t.w_hat.reserve(dataset.p());
  t.v_hat.reserve(dataset.p());
  for (const auto& r : dataset.records()) {
    const double iy2 = 1.0 / (r.se_y * r.se_y);
    t.w_hat.push_back(r.gamma_hat * r.gamma_hat * iy2);
    t.v_hat.push_back(r.se_x * r.se_x * iy2);
  }
  return t;
}

namespace detail {

struct RatioSums {
  double cross = 0.0;     // sum Gamma_hat gamma_hat / se_y^2
  double w = 0.0;         // sum w_hat
  double debiased = 0.0;  // sum (w_hat - v_hat)
};

inline RatioSums ratio_sums(const SummaryDataset& dataset, const SelectionSet& selection) {
  CompensatedSum cross, w, debiased;
  for (std::size_t j : selection.indices) {
    const auto& r = dataset[j];
    const double iy2 = 1.0 / (r.se_y * r.se_y);
    const double wj = r.gamma_hat * r.gamma_hat * iy2;
    const double vj = r.se_x * r.se_x * iy2;
    cross += r.Gamma_hat * r.gamma_hat * iy2;
    w += wj;
    debiased += wj - vj;
  }
  return {cross.value(), w.value(), debiased.value()};
}

// sum [w_hat (1 + tau2 / se_y^2) + beta^2 v_hat (w_hat + v_hat)]
inline double variance_numerator(const SummaryDataset& dataset, const SelectionSet& selection, double beta,
                                 double tau2) {
  CompensatedSum num;
  const double b2 = beta * beta;
  for (std::size_t j : selection.indices) {
    const auto& r = dataset[j];
    const double iy2 = 1.0 / (r.se_y * r.se_y);
    const double wj = r.gamma_hat * r.gamma_hat * iy2;
    const double vj = r.se_x * r.se_x * iy2;
    const double pleio = tau2 > 0.0 ? wj * tau2 * iy2 : 0.0;
    num += wj + pleio + b2 * vj * (wj + vj);
  }
  return num.value();
}

[[noreturn]] inline void throw_no_instruments(const SelectionSet& selection, double denominator) {
  std::ostringstream os;
  os << "no usable instruments at lambda = " << selection.lambda << " (" << selection.size()
     << " selected, sum of w_hat = " << denominator << ")";
  throw DegenerateError(os.str(), denominator);
}

[[noreturn]] inline void throw_degenerate(const SelectionSet& selection, double denominator) {
  std::ostringstream os;
  os << "weak-instrument degenerate denominator at lambda = " << selection.lambda
     << ": sum of (w_hat - v_hat) over " << selection.size() << " instruments is " << denominator;
  throw DegenerateError(os.str(), denominator);
}

inline void require_nonempty(const SelectionSet& selection) {
  if (selection.empty()) throw_no_instruments(selection, 0.0);
}

}  // namespace detail

/// Inverse-variance weighted estimate over the selected instruments.
inline double ivw(const SummaryDataset& dataset, const SelectionSet& selection) {
  detail::require_nonempty(selection);
  const auto s = detail::ratio_sums(dataset, selection);
  if (!(s.w > 0.0)) detail::throw_no_instruments(selection, s.w);
  return s.cross / s.w;
}

/// Debiased IVW: the IVW numerator over sum (w_hat - v_hat). A non-positive
/// denominator is an error; falling back to IVW would bring the bias back.
inline double divw(const SummaryDataset& dataset, const SelectionSet& selection) {
  detail::require_nonempty(selection);
  const auto s = detail::ratio_sums(dataset, selection);
  if (!(s.debiased > 0.0)) detail::throw_degenerate(selection, s.debiased);
  return s.cross / s.debiased;
}

inline double ivw_variance(const SummaryDataset& dataset, const SelectionSet& selection, double beta_hat) {
  detail::require_nonempty(selection);
  const auto s = detail::ratio_sums(dataset, selection);
  if (!(s.w > 0.0)) detail::throw_no_instruments(selection, s.w);
  return detail::variance_numerator(dataset, selection, beta_hat, 0.0) / (s.w * s.w);
}

inline double divw_variance(const SummaryDataset& dataset, const SelectionSet& selection, double beta_hat) {
  detail::require_nonempty(selection);
  const auto s = detail::ratio_sums(dataset, selection);
  if (!(s.debiased > 0.0)) detail::throw_degenerate(selection, s.debiased);
  return detail::variance_numerator(dataset, selection, beta_hat, 0.0) / (s.debiased * s.debiased);
}

/// Balanced-pleiotropy variance; negative tau2 is treated as 0.
inline double divw_variance_pleiotropy(const SummaryDataset& dataset, const SelectionSet& selection,
                                       double beta_hat, double tau2) {
  detail::require_nonempty(selection);
  const auto s = detail::ratio_sums(dataset, selection);
  if (!(s.debiased > 0.0)) detail::throw_degenerate(selection, s.debiased);
  return detail::variance_numerator(dataset, selection, beta_hat, std::max(tau2, 0.0)) /
         (s.debiased * s.debiased);
}

/// Moment estimate of the pleiotropy variance tau^2, always from the
/// unscreened dIVW fit over all p SNPs. May be negative.
inline double tau2_hat(const SummaryDataset& dataset) {
  const double beta = divw(dataset, select_all(dataset));
  CompensatedSum num, den;
  for (const auto& r : dataset.records()) {
    const double iy2 = 1.0 / (r.se_y * r.se_y);
    const double resid = r.Gamma_hat - beta * r.gamma_hat;
    num += (resid * resid - r.se_y * r.se_y - beta * beta * r.se_x * r.se_x) * iy2;
    den += iy2;
  }
  return num.value() / den.value();
}

}  // namespace divw

#endif
