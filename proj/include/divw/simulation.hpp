#ifndef DIVW_SIMULATION_HPP
#define DIVW_SIMULATION_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "divw/analysis.hpp"
#include "divw/data_model.hpp"
#include "divw/genotype.hpp"
#include "divw/rng.hpp"

namespace divw::sim {

enum class Dgp { summary_level, individual_level };
enum class Pleiotropy { none, balanced, directional };

/// Genotype variance under P(0)=1/4, P(1)=1/2, P(2)=1/4.
inline constexpr double kVarZ = 0.5;

struct SimulationConfig {
  Dgp dgp = Dgp::individual_level;
  std::size_t n_x = 10000;
  std::size_t n_y = 10000;
  std::size_t n_x_star = 10000;
  std::size_t p = 2000;
  std::size_t s = 200;  // non-null SNPs (the first s)
  double h2 = 0.1;
  double beta0 = 0.4;
  double eta_x = 1.0;
  double eta_y = 1.0;
  Pleiotropy pleiotropy = Pleiotropy::none;
  std::optional<double> tau0;  // balanced; unset means 2 * mean(sigma_y)
  double alpha_value = 0.01;   // directional: alpha_j for j < round(p * alpha_fraction)
  double alpha_fraction = 0.0;
  std::vector<double> gamma;  // explicit gamma; empty means phi_j sqrt(2 h2 / s)
  std::string params_file;    // summary-level population read from a file
  std::size_t replications = 500;
  std::uint64_t seed = 1;
  bool use_true_sds = false;

  void check() const {
    if (p == 0) throw ConfigError("simulation: p must be at least 1");
    if (s > p) throw ConfigError("simulation: s must not exceed p");
    if (replications == 0) throw ConfigError("simulation: replications must be at least 1");
    if (!(h2 >= 0.0 && h2 < 1.0)) throw ConfigError("simulation: h2 must lie in [0, 1)");
    if (!gamma.empty() && gamma.size() != p) throw ConfigError("simulation: explicit gamma must have length p");
    if (dgp == Dgp::individual_level && (n_x < 3 || n_y < 3 || n_x_star < 3))
      throw ConfigError("simulation: individual-level cohorts need at least 3 samples");
    if (tau0 && !(*tau0 >= 0.0)) throw ConfigError("simulation: tau0 must be nonnegative");
    if (!(alpha_fraction >= 0.0 && alpha_fraction <= 1.0))
      throw ConfigError("simulation: alpha_fraction must lie in [0, 1]");
  }
};

// Stream tags; kept far above any SNP index.
inline constexpr std::uint64_t kTagPhi = 1ULL << 62;
inline constexpr std::uint64_t kTagNoise = (1ULL << 62) + 1;
inline constexpr std::uint64_t kTagAlpha = (1ULL << 62) + 2;
inline constexpr std::uint64_t kTagSummary = (1ULL << 62) + 3;

enum Cohort : std::uint64_t { selection_cohort = 0, exposure_cohort = 1, outcome_cohort = 2 };

/// Everything fixed across replications: true parameters, fixed pleiotropy,
/// and the population variances of X and Y.
struct Population {
  PopulationParams params;
  std::vector<double> alpha;  // directional effects; empty otherwise
  double var_x = 0.0;
  double var_y = 0.0;
};

inline std::vector<double> heritability_gamma(const SimulationConfig& cfg) {
  std::vector<double> gamma(cfg.p, 0.0);
  if (cfg.s == 0) return gamma;
  SplitMix64 rng(stream_key(cfg.seed, {kTagPhi}));
  std::normal_distribution<double> normal;
  const double scale = std::sqrt(2.0 * cfg.h2 / static_cast<double>(cfg.s));
  for (std::size_t j = 0; j < cfg.s; ++j) gamma[j] = normal(rng) * scale;
  return gamma;
}

inline std::vector<double> directional_alpha(const SimulationConfig& cfg) {
  std::vector<double> alpha(cfg.p, 0.0);
  const auto k = static_cast<std::size_t>(std::lround(static_cast<double>(cfg.p) * cfg.alpha_fraction));
  for (std::size_t j = 0; j < std::min(k, cfg.p); ++j) alpha[j] = cfg.alpha_value;
  return alpha;
}

/// Builds the population. Sigmas follow the closed-form sampling SDs of a
/// marginal regression in the individual-level model:
///   sigma_Xj^2 = (Var X - gamma_j^2 Var Z) / (n_X Var Z),
///   sigma_Yj^2 = (Var Y - Gamma_j^2 Var Z) / (n_Y Var Z).
inline Population make_population(const SimulationConfig& cfg) {
  cfg.check();
  Population pop;
  if (!cfg.params_file.empty()) {
    auto file = read_population_params(cfg.params_file);
    pop.params = std::move(file.params);
    pop.params.beta0 = cfg.beta0;
    if (cfg.pleiotropy == Pleiotropy::directional) {
      SimulationConfig sized = cfg;
      sized.p = pop.params.p();
      pop.alpha = file.alpha.empty() ? directional_alpha(sized) : file.alpha;
    }
  } else {
    const auto gamma = cfg.gamma.empty() ? heritability_gamma(cfg) : cfg.gamma;
    if (cfg.pleiotropy == Pleiotropy::directional) pop.alpha = directional_alpha(cfg);
    const double noise = 1.0 - cfg.h2;
    CompensatedSum g2, G2;
    for (std::size_t j = 0; j < cfg.p; ++j) {
      const double a = pop.alpha.empty() ? 0.0 : pop.alpha[j];
      g2 += gamma[j] * gamma[j];
      G2 += (cfg.beta0 * gamma[j] + a) * (cfg.beta0 * gamma[j] + a);
    }
    pop.var_x = kVarZ * g2.value() + (cfg.eta_x * cfg.eta_x * 0.6 + 0.4) * noise;
    const double u = cfg.beta0 * cfg.eta_x + cfg.eta_y;
    pop.var_y = kVarZ * G2.value() + u * u * 0.6 * noise + (cfg.beta0 * cfg.beta0 + 1.0) * 0.4 * noise;
    auto& pr = pop.params;
    pr.gamma = gamma;
    pr.beta0 = cfg.beta0;
    for (std::size_t j = 0; j < cfg.p; ++j) {
      const double a = pop.alpha.empty() ? 0.0 : pop.alpha[j];
      const double G = cfg.beta0 * gamma[j] + a;
      const double vx = (pop.var_x - gamma[j] * gamma[j] * kVarZ) / kVarZ;
      pr.sigma_x.push_back(std::sqrt(vx / static_cast<double>(cfg.n_x)));
      pr.sigma_x_star.push_back(std::sqrt(vx / static_cast<double>(cfg.n_x_star)));
      pr.sigma_y.push_back(std::sqrt((pop.var_y - G * G * kVarZ) / (kVarZ * static_cast<double>(cfg.n_y))));
    }
  }
  if (cfg.pleiotropy == Pleiotropy::balanced) {
    if (cfg.tau0) {
      pop.params.tau0 = *cfg.tau0;
    } else {
      CompensatedSum sy;
      for (double v : pop.params.sigma_y) sy += v;
      pop.params.tau0 = 2.0 * sy.value() / static_cast<double>(pop.params.p());
    }
  }
  pop.params.check();
  return pop;
}

/// Draws one summary dataset straight from the sampling model:
/// gamma_hat ~ N(gamma, sx^2), Gamma_hat ~ N(beta0 gamma + alpha, sy^2),
/// gamma* ~ N(gamma, sx*^2). Reported SEs equal the true sigmas. With no
/// fixed alpha and tau0 > 0, alpha_j ~ N(0, tau0^2) is drawn afresh.
template <class Engine>
SummaryDataset gen_summary_level(const PopulationParams& params, std::span<const double> alpha, Engine& rng) {
  std::normal_distribution<double> normal;
  std::vector<SnpRecord> records(params.p());
  const bool random_alpha = alpha.empty() && params.tau0 > 0.0;
  for (std::size_t j = 0; j < params.p(); ++j) {
    double a = alpha.empty() ? 0.0 : alpha[j];
    if (random_alpha) a = params.tau0 * normal(rng);
    auto& r = records[j];
    r.id = "snp" + std::to_string(j + 1);
    r.gamma_hat = params.gamma[j] + params.sigma_x[j] * normal(rng);
    r.Gamma_hat = params.beta0 * params.gamma[j] + a + params.sigma_y[j] * normal(rng);
    r.gamma_star = params.gamma[j] + params.sigma_x_star[j] * normal(rng);
    r.se_x = params.sigma_x[j];
    r.se_y = params.sigma_y[j];
    r.se_x_star = params.sigma_x_star[j];
  }
  return SummaryDataset(std::move(records));
}

// ---------------------------------------------------------------------------
// Individual-level generation.

inline std::uint64_t cohort_key(std::uint64_t seed, std::size_t rep, Cohort cohort) {
  return stream_key(seed, {rep, static_cast<std::uint64_t>(cohort)});
}

inline std::uint64_t column_key(std::uint64_t cohort, std::size_t snp) { return stream_key(cohort, {snp}); }

/// Response of one cohort: X (selection/exposure) or Y (outcome) for n
/// individuals, accumulated column by column from regenerated genotypes.
///   X = sum gamma_j Z_j + eta_X U + E_X
///   Y = beta0 X + sum alpha_j Z_j + eta_Y U + E_Y
/// U ~ N(0, 0.6 (1 - h2)), E ~ N(0, 0.4 (1 - h2)).
inline std::vector<double> cohort_response(const SimulationConfig& cfg, std::span<const double> gamma,
                                           std::span<const double> alpha, std::uint64_t key, std::size_t n,
                                           bool outcome) {
  std::vector<double> x(n), y;
  SplitMix64 rng(stream_key(key, {kTagNoise}));
  std::normal_distribution<double> normal;
  const double sd_u = std::sqrt(0.6 * (1.0 - cfg.h2));
  const double sd_e = std::sqrt(0.4 * (1.0 - cfg.h2));
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = sd_u * normal(rng);
    x[i] = cfg.eta_x * u[i] + sd_e * normal(rng);
  }
  for (std::size_t j = 0; j < gamma.size(); ++j)
    if (gamma[j] != 0.0) genotype::axpy(column_key(key, j), gamma[j], x);
  if (!outcome) return x;
  y.resize(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = cfg.beta0 * x[i] + cfg.eta_y * u[i] + sd_e * normal(rng);
  for (std::size_t j = 0; j < alpha.size(); ++j)
    if (alpha[j] != 0.0) genotype::axpy(column_key(key, j), alpha[j], y);
  return y;
}

/// Marginal OLS of the response on each of the p genotype columns.
inline std::vector<genotype::MarginalFit> marginal_regressions(std::vector<double> response, std::uint64_t key,
                                                               std::size_t p) {
  CompensatedSum total;
  for (double v : response) total += v;
  const double mean = total.value() / static_cast<double>(response.size());
  CompensatedSum ss;
  for (double& v : response) {
    v -= mean;
    ss += v * v;
  }
  std::vector<genotype::MarginalFit> fits(p);
  for (std::size_t j = 0; j < p; ++j) fits[j] = genotype::marginal_ols(column_key(key, j), response, ss.value());
  return fits;
}

/// Three independent cohorts (selection, exposure, outcome), each reduced to
/// per-SNP marginal estimates. Genotypes are never stored: every column is
/// regenerated from its substream in both passes.
inline SummaryDataset gen_individual_level(const SimulationConfig& cfg, const Population& pop, std::size_t rep) {
  if (cfg.dgp != Dgp::individual_level) throw ConfigError("gen_individual_level: config is not individual-level");
  const auto& gamma = pop.params.gamma;
  std::vector<double> alpha = pop.alpha;
  if (cfg.pleiotropy == Pleiotropy::balanced && pop.params.tau0 > 0.0) {
    SplitMix64 rng(stream_key(cfg.seed, {rep, kTagAlpha}));
    std::normal_distribution<double> normal;
    alpha.resize(cfg.p);
    for (double& a : alpha) a = pop.params.tau0 * normal(rng);
  }
  const std::size_t p = cfg.p;
  auto fits = [&](Cohort c, std::size_t n) {
    const auto key = cohort_key(cfg.seed, rep, c);
    return marginal_regressions(cohort_response(cfg, gamma, alpha, key, n, c == outcome_cohort), key, p);
  };
  const auto sel = fits(selection_cohort, cfg.n_x_star);
  const auto exp = fits(exposure_cohort, cfg.n_x);
  const auto out = fits(outcome_cohort, cfg.n_y);
  std::vector<SnpRecord> records(p);
  for (std::size_t j = 0; j < p; ++j) {
    auto& r = records[j];
    r.id = "snp" + std::to_string(j + 1);
    r.gamma_hat = exp[j].beta;
    r.Gamma_hat = out[j].beta;
    r.gamma_star = sel[j].beta;
    if (cfg.use_true_sds) {
      r.se_x = pop.params.sigma_x[j];
      r.se_y = pop.params.sigma_y[j];
      r.se_x_star = pop.params.sigma_x_star[j];
    } else {
      r.se_x = exp[j].se;
      r.se_y = out[j].se;
      r.se_x_star = sel[j].se;
    }
  }
  return SummaryDataset(std::move(records));
}

/// Dataset generator bound to a config: dataset(rep) is a pure function of
/// (config, rep), so replications can run in any order on any thread.
class Simulator {
public:
  explicit Simulator(SimulationConfig cfg) : cfg_(std::move(cfg)), pop_(make_population(cfg_)) {
    if (cfg_.dgp == Dgp::individual_level && !cfg_.params_file.empty())
      throw ConfigError("simulation: params_file only applies to the summary-level generator");
  }

  const SimulationConfig& config() const noexcept { return cfg_; }
  const Population& population() const noexcept { return pop_; }

  SummaryDataset dataset(std::size_t rep) const {
    if (cfg_.dgp == Dgp::individual_level) return gen_individual_level(cfg_, pop_, rep);
    SplitMix64 rng(stream_key(cfg_.seed, {rep, kTagSummary}));
    return gen_summary_level(pop_.params, pop_.alpha, rng);
  }

private:
  SimulationConfig cfg_;
  Population pop_;
};

inline unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Evaluates fn(rep) for rep in [0, count) on a worker pool; results come
/// back in replication order.
template <class Fn>
auto run_replications(std::size_t count, unsigned workers, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using Result = decltype(fn(std::size_t{}));
  std::vector<std::optional<Result>> slots(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t rep; (rep = next.fetch_add(1)) < count;) {
      try {
        slots[rep].emplace(fn(rep));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
      }
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<Result> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo summaries.

struct MethodSpec {
  Method method = Method::divw;
  LambdaPolicy policy;
  bool pleiotropy_adjusted = false;

  std::string method_label() const {
    if (method == Method::ivw) return "IVW";
    return pleiotropy_adjusted ? "dIVW_alpha" : "dIVW";
  }

  /// method:policy, e.g. "divw:mr-eo" or "divw_alpha:0".
  static MethodSpec parse(const std::string& text) {
    const auto colon = text.find(':');
    const std::string m = text.substr(0, colon);
    const std::string pol = colon == std::string::npos ? "none" : text.substr(colon + 1);
    MethodSpec spec;
    if (m == "ivw" || m == "IVW") {
      spec.method = Method::ivw;
    } else if (m == "divw" || m == "dIVW") {
      spec.method = Method::divw;
    } else if (m == "divw_alpha" || m == "dIVW_alpha") {
      spec.method = Method::divw;
      spec.pleiotropy_adjusted = true;
    } else {
      throw ConfigError("unknown method '" + m + "' (expected ivw, divw or divw_alpha)");
    }
    spec.policy = LambdaPolicy::parse(pol);
    return spec;
  }
};

struct Outcome {
  double beta = 0.0;
  double se = 0.0;
  double lambda = 0.0;
};

using ReplicationResult = std::vector<std::optional<Outcome>>;

struct MethodSummary {
  MethodSpec spec;
  std::size_t successes = 0;
  std::size_t failure_count = 0;
  double mean = std::numeric_limits<double>::quiet_NaN();
  double sd = std::numeric_limits<double>::quiet_NaN();
  double mean_se = std::numeric_limits<double>::quiet_NaN();
  double coverage = std::numeric_limits<double>::quiet_NaN();
  double mean_lambda = std::numeric_limits<double>::quiet_NaN();

  double failure_fraction() const {
    return static_cast<double>(failure_count) / static_cast<double>(successes + failure_count);
  }
};

struct MonteCarloSummary {
  std::size_t replications = 0;
  double beta0 = 0.0;
  std::vector<MethodSummary> rows;
};

/// Runs every spec on one dataset. Degenerate estimators (empty selection,
/// non-positive denominator) become an empty slot, counted as a failure.
inline ReplicationResult analyze_replication(const SummaryDataset& data, const std::vector<MethodSpec>& specs) {
  Analyzer analyzer(data);
  ReplicationResult out(specs.size());
  for (std::size_t k = 0; k < specs.size(); ++k) {
    try {
      const auto rep = analyzer.run(specs[k].method, specs[k].policy, specs[k].pleiotropy_adjusted);
      out[k] = Outcome{rep.beta_hat, rep.se, rep.lambda};
    } catch (const DegenerateError&) {
    }
  }
  return out;
}

inline MonteCarloSummary summarize(const std::vector<ReplicationResult>& results,
                                   const std::vector<MethodSpec>& specs, double beta0) {
  MonteCarloSummary summary;
  summary.replications = results.size();
  summary.beta0 = beta0;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    MethodSummary row;
    row.spec = specs[k];
    CompensatedSum sb, sse, slam;
    std::size_t covered = 0;
    for (const auto& r : results) {
      if (!r[k]) {
        ++row.failure_count;
        continue;
      }
      ++row.successes;
      sb += r[k]->beta;
      sse += r[k]->se;
      slam += r[k]->lambda;
      if (std::abs(r[k]->beta - beta0) <= kZ975 * r[k]->se) ++covered;
    }
    if (row.successes > 0) {
      const double m = static_cast<double>(row.successes);
      row.mean = sb.value() / m;
      row.mean_se = sse.value() / m;
      row.mean_lambda = slam.value() / m;
      row.coverage = static_cast<double>(covered) / m;
      CompensatedSum dev;
      for (const auto& r : results)
        if (r[k]) dev += (r[k]->beta - row.mean) * (r[k]->beta - row.mean);
      row.sd = row.successes > 1 ? std::sqrt(dev.value() / (m - 1.0)) : 0.0;
    }
    summary.rows.push_back(row);
  }
  return summary;
}

inline MonteCarloSummary run_monte_carlo(const SimulationConfig& cfg, const std::vector<MethodSpec>& specs,
                                         unsigned workers = default_workers()) {
  const Simulator sim(cfg);
  const auto results = run_replications(cfg.replications, workers, [&](std::size_t rep) {
    return analyze_replication(sim.dataset(rep), specs);
  });
  return summarize(results, specs, cfg.beta0);
}

inline std::vector<MethodSpec> default_method_specs(const SimulationConfig& cfg) {
  std::vector<MethodSpec> specs;
  const std::vector<LambdaPolicy> fixed = {LambdaPolicy::none(), LambdaPolicy::genome_wide(),
                                           LambdaPolicy::sqrt_2_log_p()};
  for (const auto& pol : fixed) specs.push_back({Method::ivw, pol, false});
  for (const auto& pol : fixed) specs.push_back({Method::divw, pol, false});
  specs.push_back({Method::divw, LambdaPolicy::mr_eo(), false});
  if (cfg.pleiotropy != Pleiotropy::none) {
    for (const auto& pol : fixed) specs.push_back({Method::divw, pol, true});
    specs.push_back({Method::divw, LambdaPolicy::mr_eo(), true});
  }
  return specs;
}

// ---------------------------------------------------------------------------
// Named configurations.

enum class CaseId { case4, case5, case6, case7, table_s1, table_s2 };

/// The synthetic experiments. table_s1 / table_s2 run the summary-level
/// generator on a synthetic population (Case 4 scale with balanced
/// pleiotropy, Case 7 scale with directional pleiotropy on the first
/// round(p xi) SNPs); point params_file at a real population to use one.
inline SimulationConfig case_config(CaseId id, double xi = 0.25) {
  SimulationConfig c;
  c.beta0 = 0.4;
  switch (id) {
    case CaseId::case4: c.s = 200, c.h2 = 0.1; break;
    case CaseId::case5: c.s = 1000, c.h2 = 0.2; break;
    case CaseId::case6:
      c.n_x = c.n_y = c.n_x_star = 50000;
      c.s = 1000, c.h2 = 0.2;
      break;
    case CaseId::case7: c.s = 2000, c.h2 = 0.2; break;
    case CaseId::table_s1:
      c.dgp = Dgp::summary_level;
      c.s = 200, c.h2 = 0.1;
      c.pleiotropy = Pleiotropy::balanced;
      break;
    case CaseId::table_s2:
      c.dgp = Dgp::summary_level;
      c.s = 2000, c.h2 = 0.2;
      c.pleiotropy = Pleiotropy::directional;
      c.alpha_value = 0.01;
      c.alpha_fraction = xi;
      break;
  }
  return c;
}

/// Parses "4", "case4", "s1", "s2:0.25".
inline SimulationConfig case_config(const std::string& name) {
  std::string n = name;
  if (n.rfind("case", 0) == 0) n = n.substr(4);
  if (n == "4") return case_config(CaseId::case4);
  if (n == "5") return case_config(CaseId::case5);
  if (n == "6") return case_config(CaseId::case6);
  if (n == "7") return case_config(CaseId::case7);
  if (n == "s1") return case_config(CaseId::table_s1);
  if (n.rfind("s2", 0) == 0) {
    double xi = 0.25;
    if (n.size() > 2) {
      if (n[2] != ':') throw UsageError("invalid case '" + name + "'");
      auto v = detail::parse_double(n.substr(3));
      if (!v || *v < 0.0 || *v > 1.0) throw UsageError("invalid xi in case '" + name + "'");
      xi = *v;
    }
    return case_config(CaseId::table_s2, xi);
  }
  throw UsageError("unknown case '" + name + "' (expected 4, 5, 6, 7, s1 or s2:<xi>)");
}

// ---------------------------------------------------------------------------
// Config file and output.

/// Flat "key = value" file; '#' starts a comment. Keys mirror
/// SimulationConfig fields; `n` sets all three cohort sizes. Also returns
/// method specs when a `methods` key is present.
struct ConfigFile {
  SimulationConfig config;
  std::vector<MethodSpec> methods;
};

inline ConfigFile parse_config(std::istream& in, const std::string& origin = "config") {
  ConfigFile out;
  auto& c = out.config;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    const auto where = origin + ":" + std::to_string(lineno);
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
    const std::string key(detail::trim(t.substr(0, eq)));
    const std::string val(detail::trim(t.substr(eq + 1)));
    auto num = [&] {
      auto v = detail::parse_double(val);
      if (!v) throw ConfigError(where + ": '" + key + "' needs a number, got '" + val + "'");
      return *v;
    };
    auto count = [&] {
      const double v = num();
      if (v < 0.0 || v != std::floor(v)) throw ConfigError(where + ": '" + key + "' needs a nonnegative integer");
      return static_cast<std::size_t>(v);
    };
    auto flag = [&] {
      if (val == "true" || val == "1" || val == "yes") return true;
      if (val == "false" || val == "0" || val == "no") return false;
      throw ConfigError(where + ": '" + key + "' needs true or false");
    };
    if (key == "dgp") {
      if (val == "summary_level") c.dgp = Dgp::summary_level;
      else if (val == "individual_level") c.dgp = Dgp::individual_level;
      else throw ConfigError(where + ": dgp must be summary_level or individual_level");
    } else if (key == "n") {
      c.n_x = c.n_y = c.n_x_star = count();
    } else if (key == "n_x") {
      c.n_x = count();
    } else if (key == "n_y") {
      c.n_y = count();
    } else if (key == "n_x_star") {
      c.n_x_star = count();
    } else if (key == "p") {
      c.p = count();
    } else if (key == "s") {
      c.s = count();
    } else if (key == "h2") {
      c.h2 = num();
    } else if (key == "beta0") {
      c.beta0 = num();
    } else if (key == "eta_x") {
      c.eta_x = num();
    } else if (key == "eta_y") {
      c.eta_y = num();
    } else if (key == "pleiotropy") {
      if (val == "none") c.pleiotropy = Pleiotropy::none;
      else if (val == "balanced") c.pleiotropy = Pleiotropy::balanced;
      else if (val == "directional") c.pleiotropy = Pleiotropy::directional;
      else throw ConfigError(where + ": pleiotropy must be none, balanced or directional");
    } else if (key == "tau0") {
      if (val == "auto") c.tau0.reset();
      else c.tau0 = num();
    } else if (key == "alpha_value") {
      c.alpha_value = num();
    } else if (key == "alpha_fraction") {
      c.alpha_fraction = num();
    } else if (key == "gamma") {
      c.gamma.clear();
      std::istringstream ss(val);
      for (std::string tok; std::getline(ss, tok, ',');) {
        auto v = detail::parse_double(tok);
        if (!v) throw ConfigError(where + ": bad gamma entry '" + tok + "'");
        c.gamma.push_back(*v);
      }
    } else if (key == "params_file") {
      c.params_file = val;
    } else if (key == "replications") {
      c.replications = count();
    } else if (key == "seed") {
      c.seed = static_cast<std::uint64_t>(count());
    } else if (key == "use_true_sds") {
      c.use_true_sds = flag();
    } else if (key == "methods") {
      std::istringstream ss(val);
      for (std::string tok; std::getline(ss, tok, ',');) {
        const auto tt = std::string(detail::trim(tok));
        if (!tt.empty()) out.methods.push_back(MethodSpec::parse(tt));
      }
    } else {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
  c.check();
  return out;
}

inline ConfigFile read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

inline std::string format_fixed(double v, int digits = 6) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline void write_csv(std::ostream& out, const MonteCarloSummary& summary) {
  out << "method,lambda_policy,mean,sd,mean_se,coverage,failures,mean_lambda\n";
  for (const auto& r : summary.rows) {
    out << r.spec.method_label() << ',' << r.spec.policy.label() << ',' << format_fixed(r.mean) << ','
        << format_fixed(r.sd) << ',' << format_fixed(r.mean_se) << ',' << format_fixed(r.coverage) << ','
        << r.failure_count << ',' << format_fixed(r.mean_lambda) << '\n';
  }
}

inline void write_table(std::ostream& out, const MonteCarloSummary& summary) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-11s %-10s %9s %9s %9s %7s %9s %8s\n", "method", "lambda", "mean", "SD", "SE",
                "CP(%)", "failures", "lambda");
  out << buf;
  for (const auto& r : summary.rows) {
    const std::string cp = std::isnan(r.coverage) ? "NA" : format_fixed(100.0 * r.coverage, 1);
    std::snprintf(buf, sizeof buf, "%-11s %-10s %9s %9s %9s %7s %9zu %8s\n", r.spec.method_label().c_str(),
                  r.spec.policy.label().c_str(), format_fixed(r.mean, 3).c_str(), format_fixed(r.sd, 3).c_str(),
                  format_fixed(r.mean_se, 3).c_str(), cp.c_str(), r.failure_count,
                  format_fixed(r.mean_lambda, 2).c_str());
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "%zu replications, beta0 = %g\n", summary.replications, summary.beta0);
  out << buf;
}

}  // namespace divw::sim

#endif
