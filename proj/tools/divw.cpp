// divw: debiased IVW Mendelian randomization from GWAS summary statistics.
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "divw/error.hpp"

namespace {

void add_columns(CLI::App* cmd, divw::ColumnMap& c) {
  cmd->add_option("--col-snp", c.id, "SNP id column")->capture_default_str();
  cmd->add_option("--col-beta-exposure", c.gamma_hat, "exposure effect column")->capture_default_str();
  cmd->add_option("--col-se-exposure", c.se_x, "exposure SE column")->capture_default_str();
  cmd->add_option("--col-beta-outcome", c.Gamma_hat, "outcome effect column")->capture_default_str();
  cmd->add_option("--col-se-outcome", c.se_y, "outcome SE column")->capture_default_str();
  cmd->add_option("--col-beta-selection", c.gamma_star, "selection effect column")->capture_default_str();
  cmd->add_option("--col-se-selection", c.se_x_star, "selection SE column")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace divw::cli;
  CLI::App app{"Debiased inverse-variance weighted Mendelian randomization"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  std::string format = "";
  std::string output;
  app.add_option("-o,--output", output, "write results to this file instead of stdout");

  AnalyzeOptions an;
  auto* analyze = app.add_subcommand("analyze", "estimate the exposure effect from a summary-statistics TSV");
  analyze->add_option("input", an.input, "summary-statistics TSV")->required();
  analyze->add_option("--lambda", an.lambda, "none | genomewide | sqrt2logp | mr-eo | <float>")->capture_default_str();
  analyze->add_flag("--pleiotropy", an.pleiotropy, "balanced-pleiotropy variance (dIVW)");
  analyze->add_option("--method", an.method, "ivw | divw | both")->capture_default_str();
  analyze->add_option("--format", format, "json | csv | text (default json)");
  analyze->add_option("--t-max", an.t_max, "MR-EO iteration cap")->capture_default_str();
  analyze->add_option("--seed", an.seed, "accepted for uniformity; analysis uses no randomness");
  add_columns(analyze, an.columns);

  DiagnoseOptions dg;
  auto* diagnose = app.add_subcommand("diagnose", "Q-Q residuals and instrument-strength diagnostics");
  diagnose->add_option("input", dg.input, "summary-statistics TSV")->required();
  diagnose->add_option("--lambda", dg.lambda, "threshold for the strength diagnostic")->capture_default_str();
  diagnose->add_flag("--pleiotropy", dg.pleiotropy, "include tau2_hat in the residual scale");
  diagnose->add_option("--format", format, "json | csv | text (default json)");
  std::optional<std::uint64_t> diag_seed;
  diagnose->add_option("--seed", diag_seed, "accepted for uniformity; diagnostics use no randomness");
  add_columns(diagnose, dg.columns);

  SimulateOptions sm;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo study; writes a summary table");
  simulate->add_option("--case", sm.case_name, "4 | 5 | 6 | 7 | s1 | s2:<xi>");
  simulate->add_option("--config", sm.config_path, "key = value simulation config");
  simulate->add_option("--reps", sm.replications, "replications");
  simulate->add_option("--seed", sm.seed, "seed (also fixes the gamma draw)");
  simulate->add_option("--workers", sm.workers, "worker threads (default: all cores)");
  simulate->add_option("--methods", sm.methods, "comma list of method:lambda, e.g. divw:0,divw:mr-eo,ivw:5.45");
  simulate->add_option("--params", sm.params_path, "population parameter file (summary-level generator)");
  simulate->add_flag("--true-sds", sm.true_sds, "report true SDs instead of estimated SEs");
  simulate->add_option("--dump-params", sm.dump_params, "also write the population parameters here");
  simulate->add_option("--format", format, "csv | text (default csv)");

  OracleOptions orc;
  auto* oracle = app.add_subcommand("oracle", "population-level theory quantities");
  oracle->add_option("--params", orc.params_path, "population parameter file");
  oracle->add_option("--case", orc.case_name, "use a named simulation population instead");
  oracle->add_option("--lambda", orc.lambda, "screening threshold")->capture_default_str();
  oracle->add_option("--seed", orc.seed, "seed for --case populations");
  oracle->add_option("--n-x", orc.n_x, "exposure sample size for the kappa/p bound");
  oracle->add_option("--format", format, "json | csv | text (default text)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  std::ofstream file;
  if (!output.empty()) {
    file.open(output);
    if (!file) {
      std::cerr << "error: cannot write '" << output << "'\n";
      return 2;
    }
  }
  std::ostream& out = output.empty() ? std::cout : file;

  try {
    if (*analyze) {
      if (!format.empty()) an.format = parse_format(format);
      return cmd_analyze(an, out);
    }
    if (*diagnose) {
      if (!format.empty()) dg.format = parse_format(format);
      return cmd_diagnose(dg, out);
    }
    if (*simulate) {
      if (!format.empty()) sm.format = parse_format(format);
      return cmd_simulate(sm, out);
    }
    if (*oracle) {
      if (!format.empty()) orc.format = parse_format(format);
      return cmd_oracle(orc, out);
    }
  } catch (const divw::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    // a bad simulation config is a usage problem, not bad input data
    if (*simulate && e.kind() == divw::ErrorKind::config) return 1;
    return divw::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
