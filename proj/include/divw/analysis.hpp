#ifndef DIVW_ANALYSIS_HPP
#define DIVW_ANALYSIS_HPP

#include <cmath>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <string>

#include "divw/data_model.hpp"
#include "divw/estimators.hpp"
#include "divw/selection.hpp"

namespace divw {

struct LambdaPolicy {
  enum class Kind { none, fixed, genome_wide, sqrt_2_log_p, mr_eo };
  Kind kind = Kind::none;
  double value = 0.0;  // only for Kind::fixed

  static LambdaPolicy none() { return {Kind::none, 0.0}; }
  static LambdaPolicy fixed(double lambda) { return {Kind::fixed, lambda}; }
  static LambdaPolicy genome_wide() { return {Kind::genome_wide, 0.0}; }
  static LambdaPolicy sqrt_2_log_p() { return {Kind::sqrt_2_log_p, 0.0}; }
  static LambdaPolicy mr_eo() { return {Kind::mr_eo, 0.0}; }

  /// Accepts none | 0 | genomewide | sqrt2logp | mr-eo | <float>.
  static LambdaPolicy parse(const std::string& text) {
    if (text == "none") return none();
    if (text == "genomewide" || text == "genome-wide" || text == "genome_wide") return genome_wide();
    if (text == "sqrt2logp" || text == "sqrt_2_log_p") return sqrt_2_log_p();
    if (text == "mr-eo" || text == "mreo" || text == "mr_eo") return mr_eo();
    auto v = detail::parse_double(text);
    if (!v || *v < 0.0)
      throw UsageError("invalid lambda '" + text + "' (expected none, genomewide, sqrt2logp, mr-eo or a number >= 0)");
    return *v == 0.0 ? none() : fixed(*v);
  }

  std::string label() const {
    switch (kind) {
      case Kind::none: return "0";
      case Kind::genome_wide: return "5.45";
      case Kind::sqrt_2_log_p: return "sqrt2logp";
      case Kind::mr_eo: return "mr-eo";
      case Kind::fixed: return detail::format_double(value);
    }
    return "?";
  }

  bool screens() const noexcept { return kind != Kind::none; }
};

/// Runs estimators on one dataset, caching the pieces that several method /
/// policy combinations share (tau^2 and the MR-EO search).
class Analyzer {
public:
  explicit Analyzer(const SummaryDataset& dataset, MrEoOptions options = {})
      : dataset_(dataset), options_(options) {}

  /// Resolves a policy to a concrete selection set.
  SelectionSet selection(const LambdaPolicy& policy) {
    if (policy.screens() && !dataset_.has_selection())
      throw ConfigError("lambda policy '" + policy.label() +
                        "' screens instruments but the dataset has no selection columns");
    switch (policy.kind) {
      case LambdaPolicy::Kind::none: return select_all(dataset_);
      case LambdaPolicy::Kind::fixed: return screen(dataset_, policy.value);
      case LambdaPolicy::Kind::genome_wide: return screen(dataset_, kGenomeWideLambda);
      case LambdaPolicy::Kind::sqrt_2_log_p: return screen(dataset_, sqrt_two_log_p(dataset_.p()));
      case LambdaPolicy::Kind::mr_eo: return mr_eo_result().selection;
    }
    return select_all(dataset_);
  }

  const MrEoResult& mr_eo_result() {
    if (!mr_eo_) mr_eo_ = mr_eo(dataset_, options_);
    return *mr_eo_;
  }

  bool has_mr_eo() const noexcept { return mr_eo_.has_value(); }

  double tau2() {
    if (!tau2_) tau2_ = tau2_hat(dataset_);
    return *tau2_;
  }

  EstimateReport run(Method method, const LambdaPolicy& policy, bool pleiotropy) {
    const auto sel = selection(policy);
    return run(method, sel, pleiotropy);
  }

  EstimateReport run(Method method, const SelectionSet& sel, bool pleiotropy) {
    EstimateReport rep;
    rep.method = method;
    rep.lambda = sel.lambda;
    rep.p_selected = sel.size();
    if (method == Method::ivw) {
      rep.beta_hat = ivw(dataset_, sel);
      rep.se = std::sqrt(ivw_variance(dataset_, sel, rep.beta_hat));
    } else {
      rep.beta_hat = divw(dataset_, sel);
      if (pleiotropy) {
        rep.pleiotropy_adjusted = true;
        rep.se = std::sqrt(divw_variance_pleiotropy(dataset_, sel, rep.beta_hat, tau2()));
      } else {
        rep.se = std::sqrt(divw_variance(dataset_, sel, rep.beta_hat));
      }
    }
    rep.set_interval();
    if (pleiotropy) {
      rep.tau2_hat = tau2();
      if (method == Method::ivw)
        rep.warnings.push_back("pleiotropy-adjusted variance is defined for dIVW only; IVW SE is unadjusted");
      if (*rep.tau2_hat < 0.0) rep.warnings.push_back("tau2_hat is negative; treated as 0 in the variance");
    }
    const auto strength = kappa_hat(dataset_, sel);
    rep.kappa_hat = strength.kappa_hat;
    rep.effective_sample_size = strength.effective_sample_size;
    if (rep.effective_sample_size < kEffectiveSampleSizeFloor) {
      std::ostringstream os;
      os << "effective sample size below 20 (" << rep.effective_sample_size << ")";
      rep.warnings.push_back(os.str());
    }
    return rep;
  }

private:
  const SummaryDataset& dataset_;
  MrEoOptions options_;
  std::optional<double> tau2_;
  std::optional<MrEoResult> mr_eo_;
};

inline EstimateReport analyze(const SummaryDataset& dataset, Method method, const LambdaPolicy& policy,
                              bool pleiotropy) {
  Analyzer a(dataset);
  return a.run(method, policy, pleiotropy);
}

}  // namespace divw

#endif
