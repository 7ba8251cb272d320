#ifndef DIVW_TOOLS_COMMANDS_HPP
#define DIVW_TOOLS_COMMANDS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "divw/data_model.hpp"

#include <json.hpp>

namespace divw::cli {

inline constexpr const char* kVersion = "0.1.0";

enum class Format { json, csv, text };

Format parse_format(const std::string& text);

struct AnalyzeOptions {
  std::string input;
  ColumnMap columns;
  std::string lambda = "none";
  bool pleiotropy = false;
  std::string method = "both";  // ivw | divw | both
  Format format = Format::json;
  int t_max = 5;
  std::optional<std::uint64_t> seed;  // accepted for interface uniformity; analysis is deterministic
};

struct DiagnoseOptions {
  std::string input;
  ColumnMap columns;
  std::string lambda = "none";
  bool pleiotropy = false;
  Format format = Format::json;
};

struct SimulateOptions {
  std::string case_name;
  std::string config_path;
  std::optional<std::size_t> replications;
  std::optional<std::uint64_t> seed;
  unsigned workers = 0;  // 0 = hardware concurrency
  std::string methods;   // comma list of method:policy
  std::string params_path;
  bool true_sds = false;
  Format format = Format::csv;
  std::string dump_params;
};

struct OracleOptions {
  std::string params_path;
  std::string case_name;
  double lambda = 0.0;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_x;
  Format format = Format::text;
};

// Each command writes its result to `out` and returns the process exit code;
// divw::Error exceptions propagate to the caller.
int cmd_analyze(const AnalyzeOptions& opt, std::ostream& out);
int cmd_diagnose(const DiagnoseOptions& opt, std::ostream& out);
int cmd_simulate(const SimulateOptions& opt, std::ostream& out);
int cmd_oracle(const OracleOptions& opt, std::ostream& out);

std::string sha256_file(const std::string& path);

nlohmann::ordered_json to_json(const EstimateReport& report);

/// Standardized residuals (Gamma_hat - b gamma_hat) / sqrt(se_y^2 + tau2 +
/// b^2 se_x^2) with b the unscreened dIVW estimate, paired after sorting
/// with the normal quantiles Phi^-1((i - 0.5) / p).
struct QqData {
  std::vector<double> theoretical;
  std::vector<double> residual;
  double beta_divw = 0.0;
  std::optional<double> tau2_hat;
};

QqData qq_residuals(const SummaryDataset& dataset, bool pleiotropy);

}  // namespace divw::cli

#endif
