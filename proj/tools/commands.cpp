#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <openssl/evp.h>

#include "divw/divw.hpp"

namespace divw::cli {

using nlohmann::ordered_json;

Format parse_format(const std::string& text) {
  if (text == "json") return Format::json;
  if (text == "csv") return Format::csv;
  if (text == "text") return Format::text;
  throw UsageError("unknown format '" + text + "' (expected json, csv or text)");
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

namespace {

SummaryDataset load(const std::string& path, const ColumnMap& columns, std::vector<std::string>& warnings) {
  auto data = read_summary_tsv(path, columns);
  const auto violations = validate(data);
  if (!violations.empty()) {
    std::ostringstream os;
    os << violations.size() << " invalid record(s) in '" << path << "'";
    for (std::size_t i = 0; i < std::min<std::size_t>(violations.size(), 5); ++i)
      os << "; SNP " << violations[i].id << " field " << violations[i].field << ": " << violations[i].message;
    throw DataError(os.str());
  }
  for (const auto& id : duplicate_ids(data)) warnings.push_back("duplicate SNP id '" + id + "'");
  return data;
}

ordered_json input_json(const std::string& path, const SummaryDataset& data) {
  return {{"path", path}, {"sha256", sha256_file(path)}, {"p", data.p()}, {"has_selection", data.has_selection()}};
}

ordered_json strength_json(const StrengthEstimates& s) {
  return {{"kappa_hat", s.kappa_hat},
          {"p_hat", s.p_hat},
          {"lambda", s.lambda},
          {"effective_sample_size", s.effective_sample_size}};
}

ordered_json trace_json(const MrEoTrace& trace) {
  ordered_json it = ordered_json::array();
  for (const auto& i : trace.iterations)
    it.push_back({{"t", i.t}, {"lambda", i.lambda}, {"beta", i.beta}, {"variance", i.variance}, {"accepted", i.accepted}});
  return {{"iterations", it}, {"final_lambda", trace.final_lambda}, {"stop_reason", to_string(trace.stop_reason)}};
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
  return s;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) out += (c == '"') ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

ordered_json to_json(const EstimateReport& r) {
  ordered_json j = {{"method", to_string(r.method)},
                    {"pleiotropy_adjusted", r.pleiotropy_adjusted},
                    {"lambda", r.lambda},
                    {"beta_hat", r.beta_hat},
                    {"se", r.se},
                    {"ci_low", r.ci_low},
                    {"ci_high", r.ci_high},
                    {"p_selected", r.p_selected},
                    {"kappa_hat", r.kappa_hat},
                    {"effective_sample_size", r.effective_sample_size}};
  j["tau2_hat"] = r.tau2_hat ? ordered_json(*r.tau2_hat) : ordered_json(nullptr);
  j["warnings"] = r.warnings;
  return j;
}

int cmd_analyze(const AnalyzeOptions& opt, std::ostream& out) {
  if (opt.method != "ivw" && opt.method != "divw" && opt.method != "both")
    throw UsageError("unknown method '" + opt.method + "' (expected ivw, divw or both)");
  const auto policy = LambdaPolicy::parse(opt.lambda);
  std::vector<std::string> warnings;
  const auto data = load(opt.input, opt.columns, warnings);
  MrEoOptions eo;
  eo.t_max = opt.t_max;
  Analyzer analyzer(data, eo);
  const auto selection = analyzer.selection(policy);

  std::vector<EstimateReport> reports;
  if (opt.method != "divw") reports.push_back(analyzer.run(Method::ivw, selection, opt.pleiotropy));
  if (opt.method != "ivw") reports.push_back(analyzer.run(Method::divw, selection, opt.pleiotropy));
  const auto strength = kappa_hat(data, selection);

  switch (opt.format) {
    case Format::json: {
      ordered_json doc = {{"tool", "divw"}, {"version", kVersion}, {"command", "analyze"}};
      doc["input"] = input_json(opt.input, data);
      doc["lambda_policy"] = policy.label();
      doc["estimates"] = ordered_json::array();
      for (const auto& r : reports) doc["estimates"].push_back(to_json(r));
      doc["strength"] = strength_json(strength);
      if (analyzer.has_mr_eo()) doc["mr_eo"] = trace_json(analyzer.mr_eo_result().trace);
      doc["warnings"] = warnings;
      out << doc.dump(2) << '\n';
      break;
    }
    case Format::csv: {
      out << "method,pleiotropy_adjusted,lambda,beta_hat,se,ci_low,ci_high,p_selected,kappa_hat,"
             "effective_sample_size,tau2_hat,warnings\n";
      for (const auto& r : reports) {
        auto w = r.warnings;
        w.insert(w.end(), warnings.begin(), warnings.end());
        out << to_string(r.method) << ',' << (r.pleiotropy_adjusted ? "true" : "false") << ','
            << detail::format_double(r.lambda) << ',' << detail::format_double(r.beta_hat) << ','
            << detail::format_double(r.se) << ',' << detail::format_double(r.ci_low) << ','
            << detail::format_double(r.ci_high) << ',' << r.p_selected << ',' << detail::format_double(r.kappa_hat)
            << ',' << detail::format_double(r.effective_sample_size) << ','
            << (r.tau2_hat ? detail::format_double(*r.tau2_hat) : "NA") << ',' << csv_quote(join(w, "; "))
            << '\n';
      }
      break;
    }
    case Format::text: {
      out << "input: " << opt.input << " (p = " << data.p() << ")\n";
      out << "lambda policy: " << policy.label() << ", lambda = " << num(selection.lambda)
          << ", selected = " << selection.size() << "\n\n";
      char buf[256];
      std::snprintf(buf, sizeof buf, "%-6s %-10s %10s %10s %23s %9s %10s\n", "method", "pleiotropy", "estimate",
                    "SE", "95% CI", "selected", "kappa_hat");
      out << buf;
      for (const auto& r : reports) {
        const std::string ci = "(" + num(r.ci_low) + ", " + num(r.ci_high) + ")";
        std::snprintf(buf, sizeof buf, "%-6s %-10s %10.4f %10.4f %23s %9zu %10.3f\n", to_string(r.method).c_str(),
                      r.pleiotropy_adjusted ? "yes" : "no", r.beta_hat, r.se, ci.c_str(), r.p_selected,
                      r.kappa_hat);
        out << buf;
      }
      out << "\neffective sample size: " << num(strength.effective_sample_size) << '\n';
      if (!reports.empty() && reports.front().tau2_hat) out << "tau2_hat: " << num(*reports.front().tau2_hat) << '\n';
      if (analyzer.has_mr_eo()) {
        const auto& tr = analyzer.mr_eo_result().trace;
        out << "MR-EO: final lambda " << num(tr.final_lambda) << " (" << to_string(tr.stop_reason) << ")\n";
      }
      std::vector<std::string> all = warnings;
      for (const auto& r : reports)
        for (const auto& w : r.warnings)
          if (std::find(all.begin(), all.end(), w) == all.end()) all.push_back(w);
      for (const auto& w : all) out << "warning: " << w << '\n';
      break;
    }
  }
  return 0;
}

QqData qq_residuals(const SummaryDataset& data, bool pleiotropy) {
  QqData qq;
  qq.beta_divw = divw(data, select_all(data));
  double tau2 = 0.0;
  if (pleiotropy) {
    qq.tau2_hat = tau2_hat(data);
    tau2 = std::max(*qq.tau2_hat, 0.0);
  }
  const double b = qq.beta_divw;
  for (const auto& r : data.records())
    qq.residual.push_back((r.Gamma_hat - b * r.gamma_hat) /
                          std::sqrt(r.se_y * r.se_y + tau2 + b * b * r.se_x * r.se_x));
  std::sort(qq.residual.begin(), qq.residual.end());
  const double p = static_cast<double>(data.p());
  for (std::size_t i = 0; i < data.p(); ++i)
    qq.theoretical.push_back(normal_quantile((static_cast<double>(i) + 0.5) / p));
  return qq;
}

int cmd_diagnose(const DiagnoseOptions& opt, std::ostream& out) {
  const auto policy = LambdaPolicy::parse(opt.lambda);
  std::vector<std::string> warnings;
  const auto data = load(opt.input, opt.columns, warnings);
  Analyzer analyzer(data);
  const auto selection = analyzer.selection(policy);
  const auto strength = kappa_hat(data, selection);
  const auto qq = qq_residuals(data, opt.pleiotropy);
  const bool pass = strength.effective_sample_size >= kEffectiveSampleSizeFloor;
  const char* status = pass ? "PASS" : "WARN";

  switch (opt.format) {
    case Format::json: {
      ordered_json doc = {{"tool", "divw"}, {"version", kVersion}, {"command", "diagnose"}};
      doc["input"] = input_json(opt.input, data);
      doc["lambda_policy"] = policy.label();
      doc["strength"] = strength_json(strength);
      ordered_json pairs = ordered_json::array();
      for (std::size_t i = 0; i < qq.residual.size(); ++i)
        pairs.push_back({{"theoretical", qq.theoretical[i]}, {"residual", qq.residual[i]}});
      doc["diagnostics"] = {{"beta_divw", qq.beta_divw},
                            {"pleiotropy_adjusted", opt.pleiotropy},
                            {"tau2_hat", qq.tau2_hat ? ordered_json(*qq.tau2_hat) : ordered_json(nullptr)},
                            {"effective_sample_size", strength.effective_sample_size},
                            {"effective_sample_size_threshold", kEffectiveSampleSizeFloor},
                            {"status", status},
                            {"qq", pairs}};
      doc["warnings"] = warnings;
      out << doc.dump(2) << '\n';
      break;
    }
    case Format::csv: {
      out << "theoretical,residual\n";
      for (std::size_t i = 0; i < qq.residual.size(); ++i)
        out << detail::format_double(qq.theoretical[i]) << ',' << detail::format_double(qq.residual[i]) << '\n';
      break;
    }
    case Format::text: {
      out << "input: " << opt.input << " (p = " << data.p() << ")\n";
      out << "lambda = " << num(strength.lambda) << ", selected = " << strength.p_hat
          << ", kappa_hat = " << num(strength.kappa_hat) << '\n';
      out << "effective sample size kappa_hat sqrt(p_hat) / max(1, lambda^2) = "
          << num(strength.effective_sample_size) << "  [" << status << ": threshold 20]\n";
      out << "dIVW (lambda = 0) used for residuals: " << num(qq.beta_divw) << '\n';
      if (qq.tau2_hat) out << "tau2_hat: " << num(*qq.tau2_hat) << '\n';
      out << "\n  theoretical     residual\n";
      char buf[64];
      for (std::size_t i = 0; i < qq.residual.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%13.5f %12.5f\n", qq.theoretical[i], qq.residual[i]);
        out << buf;
      }
      for (const auto& w : warnings) out << "warning: " << w << '\n';
      break;
    }
  }
  return 0;
}

int cmd_simulate(const SimulateOptions& opt, std::ostream& out) {
  if (opt.case_name.empty() == opt.config_path.empty())
    throw UsageError("simulate needs exactly one of --case or --config");
  if (opt.format == Format::json) throw UsageError("simulate writes csv or text");
  sim::SimulationConfig cfg;
  std::vector<sim::MethodSpec> specs;
  if (!opt.case_name.empty()) {
    cfg = sim::case_config(opt.case_name);
  } else {
    auto file = sim::read_config(opt.config_path);
    cfg = file.config;
    specs = file.methods;
  }
  if (opt.replications) cfg.replications = *opt.replications;
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.true_sds) cfg.use_true_sds = true;
  if (!opt.params_path.empty()) {
    cfg.dgp = sim::Dgp::summary_level;
    cfg.params_file = opt.params_path;
  }
  try {
    cfg.check();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  if (!opt.methods.empty()) {
    specs.clear();
    std::istringstream ss(opt.methods);
    for (std::string tok; std::getline(ss, tok, ',');)
      if (!tok.empty()) specs.push_back(sim::MethodSpec::parse(tok));
  }
  if (specs.empty()) specs = sim::default_method_specs(cfg);

  if (!opt.dump_params.empty()) {
    const auto pop = sim::make_population(cfg);
    std::ofstream f(opt.dump_params);
    if (!f) throw DataError("cannot write '" + opt.dump_params + "'");
    write_population_params(f, pop.params, pop.alpha);
  }
  const unsigned workers = opt.workers ? opt.workers : sim::default_workers();
  const auto summary = sim::run_monte_carlo(cfg, specs, workers);
  if (opt.format == Format::csv)
    sim::write_csv(out, summary);
  else
    sim::write_table(out, summary);
  return 0;
}

int cmd_oracle(const OracleOptions& opt, std::ostream& out) {
  if (opt.params_path.empty() == opt.case_name.empty())
    throw UsageError("oracle needs exactly one of --params or --case");
  if (!(opt.lambda >= 0.0)) throw UsageError("lambda must be nonnegative");
  PopulationParams params;
  std::vector<double> alpha;
  std::optional<std::size_t> n_x = opt.n_x;
  if (!opt.params_path.empty()) {
    auto file = read_population_params(opt.params_path);
    params = std::move(file.params);
    alpha = std::move(file.alpha);
  } else {
    auto cfg = sim::case_config(opt.case_name);
    if (opt.seed) cfg.seed = *opt.seed;
    auto pop = sim::make_population(cfg);
    params = std::move(pop.params);
    alpha = std::move(pop.alpha);
    if (!n_x && cfg.dgp == sim::Dgp::individual_level) n_x = cfg.n_x;
  }
  if (alpha.empty()) alpha.assign(params.p(), 0.0);

  const auto strength = theory::population_strength(params, opt.lambda);
  const double v_ivw = theory::asymptotic_variance(params, opt.lambda, Method::ivw);
  const double v_divw = theory::asymptotic_variance(params, opt.lambda, Method::divw);
  const double abias = theory::ivw_abias(params);
  const double limit = theory::screened_ivw_limit(params, opt.lambda);
  std::optional<double> bias;
  std::string bias_error;
  try {
    bias = theory::unbalanced_bias(params, alpha, opt.lambda);
  } catch (const Error& e) {
    bias_error = e.what();
  }
  std::optional<theory::KappaPBound> kp;
  if (n_x) kp = theory::kappa_p_bound(params, *n_x);

  if (opt.format == Format::json) {
    ordered_json doc = {{"tool", "divw"}, {"version", kVersion}, {"command", "oracle"}};
    doc["p"] = params.p();
    doc["beta0"] = params.beta0;
    doc["tau0"] = params.tau0;
    doc["lambda"] = opt.lambda;
    doc["kappa"] = strength.kappa;
    doc["kappa_lambda"] = strength.kappa_lambda;
    doc["p_lambda"] = strength.p_lambda;
    doc["effective_sample_size"] = effective_sample_size(strength.kappa_lambda, strength.p_lambda, opt.lambda);
    doc["asymptotic_variance_ivw"] = v_ivw;
    doc["asymptotic_variance_divw"] = v_divw;
    doc["ivw_abias"] = abias;
    doc["screened_ivw_limit"] = limit;
    doc["unbalanced_bias"] = bias ? ordered_json(*bias) : ordered_json(nullptr);
    doc["beta0_plus_bias"] = bias ? ordered_json(params.beta0 + *bias) : ordered_json(nullptr);
    if (!bias) doc["unbalanced_bias_error"] = bias_error;
    if (kp) doc["kappa_over_p"] = {{"ratio", kp->ratio}, {"bound", kp->bound}};
    out << doc.dump(2) << '\n';
  } else if (opt.format == Format::text) {
    out << "p = " << params.p() << ", beta0 = " << num(params.beta0) << ", lambda = " << num(opt.lambda) << '\n';
    out << "kappa                 " << num(strength.kappa) << '\n';
    out << "kappa_lambda          " << num(strength.kappa_lambda) << '\n';
    out << "p_lambda              " << num(strength.p_lambda) << '\n';
    out << "V_lambda,IVW          " << num(v_ivw) << '\n';
    out << "V_lambda,dIVW         " << num(v_divw) << '\n';
    out << "IVW abias             " << num(abias) << '\n';
    out << "screened IVW limit    " << num(limit) << '\n';
    if (bias)
      out << "unbalanced bias       " << num(*bias) << "  (beta0 + bias = " << num(params.beta0 + *bias) << ")\n";
    else
      out << "unbalanced bias       undefined: " << bias_error << '\n';
    if (kp) out << "kappa/p               " << num(kp->ratio) << "  (n_x/p^2 = " << num(kp->bound) << ")\n";
  } else {
    out << "quantity,value\n";
    out << "kappa," << detail::format_double(strength.kappa) << '\n';
    out << "kappa_lambda," << detail::format_double(strength.kappa_lambda) << '\n';
    out << "p_lambda," << detail::format_double(strength.p_lambda) << '\n';
    out << "asymptotic_variance_ivw," << detail::format_double(v_ivw) << '\n';
    out << "asymptotic_variance_divw," << detail::format_double(v_divw) << '\n';
    out << "ivw_abias," << detail::format_double(abias) << '\n';
    out << "screened_ivw_limit," << detail::format_double(limit) << '\n';
    out << "unbalanced_bias," << (bias ? detail::format_double(*bias) : "NA") << '\n';
  }
  return 0;
}

}  // namespace divw::cli
