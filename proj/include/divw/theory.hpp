#ifndef DIVW_THEORY_HPP
#define DIVW_THEORY_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "divw/data_model.hpp"
#include "divw/numerics.hpp"

// Population-level closed forms. Every function here takes true parameters,
// never estimates, and is what the Monte Carlo tests compare against.
namespace divw::theory {

/// q_j = P(|gamma*_j| > lambda sigma*_j) under gamma*_j ~ N(gamma_j, sigma*_j^2).
inline std::vector<double> q_lambda(const PopulationParams& params, double lambda) {
  std::vector<double> q(params.p());
  for (std::size_t j = 0; j < q.size(); ++j) {
    if (lambda == 0.0) {
      q[j] = 1.0;
      continue;
    }
    const double delta = params.gamma[j] / params.sigma_x_star[j];
    q[j] = normal_cdf(delta - lambda) + normal_cdf(-delta - lambda);
  }
  return q;
}

struct PopulationStrength {
  double kappa = 0.0;
  double kappa_lambda = 0.0;
  double p_lambda = 0.0;
  std::vector<double> q;
};

inline PopulationStrength population_strength(const PopulationParams& params, double lambda) {
  PopulationStrength s;
  s.q = q_lambda(params, lambda);
  CompensatedSum all, weighted, mass;
  for (std::size_t j = 0; j < params.p(); ++j) {
    const double z2 = params.gamma[j] * params.gamma[j] / (params.sigma_x[j] * params.sigma_x[j]);
    all += z2;
    weighted += z2 * s.q[j];
    mass += s.q[j];
  }
  s.kappa = all.value() / static_cast<double>(params.p());
  s.p_lambda = mass.value();
  s.kappa_lambda = weighted.value() / s.p_lambda;
  return s;
}

namespace detail {

struct Weights {
  std::vector<double> w, v;
};

inline Weights weights(const PopulationParams& params) {
  Weights out;
  for (std::size_t j = 0; j < params.p(); ++j) {
    const double iy2 = 1.0 / (params.sigma_y[j] * params.sigma_y[j]);
    out.w.push_back(params.gamma[j] * params.gamma[j] * iy2);
    out.v.push_back(params.sigma_x[j] * params.sigma_x[j] * iy2);
  }
  return out;
}

}  // namespace detail

/// Asymptotic bias of unscreened IVW: -beta0 sum v / sum (w + v).
inline double ivw_abias(const PopulationParams& params) {
  const auto [w, v] = detail::weights(params);
  CompensatedSum sv, swv;
  for (std::size_t j = 0; j < w.size(); ++j) {
    sv += v[j];
    swv += w[j] + v[j];
  }
  return -params.beta0 * sv.value() / swv.value();
}

/// Probability limit of screened IVW when kappa_lambda stays bounded.
inline double screened_ivw_limit(const PopulationParams& params, double lambda) {
  const auto [w, v] = detail::weights(params);
  const auto q = q_lambda(params, lambda);
  CompensatedSum num, den;
  for (std::size_t j = 0; j < w.size(); ++j) {
    num += w[j] * q[j];
    den += (w[j] + v[j]) * q[j];
  }
  return params.beta0 * num.value() / den.value();
}

inline double asymptotic_variance(const PopulationParams& params, double lambda, Method estimator) {
  const auto [w, v] = detail::weights(params);
  const auto q = q_lambda(params, lambda);
  const double b2 = params.beta0 * params.beta0;
  CompensatedSum num, den;
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (estimator == Method::ivw) {
      num += (w[j] + v[j]) * q[j] + b2 * v[j] * (w[j] + 3.0 * v[j]) * q[j] - b2 * v[j] * v[j] * q[j] * q[j];
      den += (w[j] + v[j]) * q[j];
    } else {
      num += ((w[j] + v[j]) + b2 * v[j] * (w[j] + 2.0 * v[j])) * q[j];
      den += w[j] * q[j];
    }
  }
  if (!(den.value() > 0.0))
    throw DegenerateError("asymptotic_variance: sum of w_j q_j is zero", den.value());
  return num.value() / (den.value() * den.value());
}

/// Limit bias of dIVW under directional pleiotropy: weighted mean of
/// alpha_j / gamma_j with weights w_j q_j.
inline double unbalanced_bias(const PopulationParams& params, std::span<const double> alpha, double lambda) {
  if (alpha.size() != params.p()) throw ConfigError("unbalanced_bias: alpha must have length p");
  const auto [w, v] = detail::weights(params);
  const auto q = q_lambda(params, lambda);
  CompensatedSum num, den;
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (params.gamma[j] == 0.0) {
      if (alpha[j] != 0.0)
        throw ConfigError("unbalanced_bias: alpha_j / gamma_j undefined at SNP " + std::to_string(j) +
                          " (gamma_j = 0, alpha_j != 0)");
      continue;
    }
    num += alpha[j] / params.gamma[j] * w[j] * q[j];
    den += w[j] * q[j];
  }
  if (!(den.value() > 0.0)) throw DegenerateError("unbalanced_bias: all w_j q_j are zero", den.value());
  return num.value() / den.value();
}

struct KappaPBound {
  double ratio = 0.0;  // kappa / p
  double bound = 0.0;  // n_x / p^2
};

inline KappaPBound kappa_p_bound(const PopulationParams& params, std::size_t n_x) {
  if (n_x == 0) throw ConfigError("kappa_p_bound: n_x must be at least 1");
  const double p = static_cast<double>(params.p());
  const auto s = population_strength(params, 0.0);
  return {s.kappa / p, static_cast<double>(n_x) / (p * p)};
}

/// kappa_lambda with q_j replaced by its one-sided approximation
/// Phi(delta_j - lambda), delta_j = |gamma_j| / sigma*_j. Nondecreasing in
/// lambda for every delta vector.
inline double approx_kappa_lambda(std::span<const double> delta, double lambda) {
  CompensatedSum num, den;
  for (double d : delta) {
    const double phi = normal_cdf(d - lambda);
    num += d * d * phi;
    den += phi;
  }
  return num.value() / den.value();
}

}  // namespace divw::theory

#endif
