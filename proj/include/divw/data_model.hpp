#ifndef DIVW_DATA_MODEL_HPP
#define DIVW_DATA_MODEL_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "divw/error.hpp"

namespace divw {

/// One harmonized SNP from the exposure/outcome (and optional selection) GWAS.
struct SnpRecord {
  std::string id;
  double gamma_hat = 0.0;  // SNP-exposure association
  double se_x = 0.0;
  double Gamma_hat = 0.0;  // SNP-outcome association
  double se_y = 0.0;
  std::optional<double> gamma_star;  // selection-dataset association
  std::optional<double> se_x_star;

  bool has_selection() const noexcept { return gamma_star.has_value() && se_x_star.has_value(); }
};

class SummaryDataset {
public:
  explicit SummaryDataset(std::vector<SnpRecord> records) : records_(std::move(records)) {
    if (records_.empty()) throw DataError("summary dataset must contain at least one SNP");
    has_selection_ = std::all_of(records_.begin(), records_.end(),
                                 [](const SnpRecord& r) { return r.has_selection(); });
  }

  std::size_t p() const noexcept { return records_.size(); }
  bool has_selection() const noexcept { return has_selection_; }
  const std::vector<SnpRecord>& records() const noexcept { return records_; }
  const SnpRecord& operator[](std::size_t j) const { return records_[j]; }

private:
  std::vector<SnpRecord> records_;
  bool has_selection_ = false;
};

/// True per-SNP parameters behind a summary dataset; used by the oracles and
/// by the summary-level generator.
struct PopulationParams {
  std::vector<double> gamma;
  std::vector<double> sigma_x;
  std::vector<double> sigma_y;
  std::vector<double> sigma_x_star;
  double beta0 = 0.0;
  double tau0 = 0.0;

  std::size_t p() const noexcept { return gamma.size(); }

  void check() const {
    const std::size_t n = gamma.size();
    if (n == 0) throw DataError("population parameters: p must be at least 1");
    if (sigma_x.size() != n || sigma_y.size() != n || sigma_x_star.size() != n)
      throw DataError("population parameters: all vectors must have length p");
    auto positive = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [](double s) { return s > 0.0 && std::isfinite(s); });
    };
    if (!positive(sigma_x) || !positive(sigma_y) || !positive(sigma_x_star))
      throw DataError("population parameters: every sigma must be positive");
    if (!(tau0 >= 0.0)) throw DataError("population parameters: tau0 must be nonnegative");
  }
};

enum class Method { ivw, divw };

inline std::string to_string(Method m) { return m == Method::ivw ? "IVW" : "dIVW"; }

inline constexpr double kZ975 = 1.96;

struct EstimateReport {
  Method method = Method::divw;
  bool pleiotropy_adjusted = false;
  double lambda = 0.0;
  double beta_hat = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t p_selected = 0;
  double kappa_hat = 0.0;
  double effective_sample_size = 0.0;
  std::optional<double> tau2_hat;
  std::vector<std::string> warnings;

  void set_interval() {
    ci_low = beta_hat - kZ975 * se;
    ci_high = beta_hat + kZ975 * se;
  }
};

struct Violation {
  std::string id;
  std::string field;
  std::string message;
};

/// Checks every SnpRecord invariant; violations are returned, never thrown.
inline std::vector<Violation> validate(const SummaryDataset& dataset) {
  std::vector<Violation> out;
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  for (const auto& r : dataset.records()) {
    if (!std::isfinite(r.gamma_hat)) out.push_back({r.id, "gamma_hat", "must be finite"});
    if (!std::isfinite(r.Gamma_hat)) out.push_back({r.id, "Gamma_hat", "must be finite"});
    if (!positive(r.se_x)) out.push_back({r.id, "se_x", "must be positive"});
    if (!positive(r.se_y)) out.push_back({r.id, "se_y", "must be positive"});
    if (r.gamma_star.has_value() != r.se_x_star.has_value()) {
      out.push_back({r.id, r.gamma_star ? "se_x_star" : "gamma_star",
                     "gamma_star and se_x_star must be both present or both absent"});
    } else if (r.se_x_star && !positive(*r.se_x_star)) {
      out.push_back({r.id, "se_x_star", "must be positive"});
    }
  }
  return out;
}

/// Ids that occur more than once. Estimators are index-based, so this only
/// feeds a warning.
inline std::vector<std::string> duplicate_ids(const SummaryDataset& dataset) {
  std::unordered_set<std::string> seen, reported;
  std::vector<std::string> dups;
  for (const auto& r : dataset.records())
    if (!seen.insert(r.id).second && reported.insert(r.id).second) dups.push_back(r.id);
  return dups;
}

struct ColumnMap {
  std::string id = "SNP";
  std::string gamma_hat = "beta.exposure";
  std::string se_x = "se.exposure";
  std::string Gamma_hat = "beta.outcome";
  std::string se_y = "se.outcome";
  std::string gamma_star = "beta.selection";
  std::string se_x_star = "se.selection";
};

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    cells.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return cells;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Locale-independent decimal/exponent parse of the whole cell.
inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline bool is_missing(std::string_view s) {
  s = trim(s);
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == ".";
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace detail

/// Reads a tab-separated summary file. Selection columns are optional; a row
/// with empty/NA selection cells gets no selection fields.
inline SummaryDataset read_summary_tsv(std::istream& in, const ColumnMap& columns = {}) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("summary file is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = detail::split_tabs(line);
  auto find = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (detail::trim(header[i]) == name) return i;
    return std::nullopt;
  };
  auto require = [&](const std::string& name) {
    auto idx = find(name);
    if (!idx) throw ConfigError("summary file: missing column '" + name + "'");
    return *idx;
  };
  const std::size_t c_id = require(columns.id);
  const std::size_t c_g = require(columns.gamma_hat);
  const std::size_t c_sx = require(columns.se_x);
  const std::size_t c_G = require(columns.Gamma_hat);
  const std::size_t c_sy = require(columns.se_y);
  const auto c_gs = find(columns.gamma_star);
  const auto c_sxs = find(columns.se_x_star);

  std::vector<SnpRecord> records;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    ++row;
    const auto cells = detail::split_tabs(line);
    auto cell = [&](std::size_t col, const std::string& name) -> std::string_view {
      if (col >= cells.size())
        throw DataError("summary file: row " + std::to_string(row) + " has no value for column '" + name + "'");
      return cells[col];
    };
    auto number = [&](std::size_t col, const std::string& name) {
      const auto text = cell(col, name);
      auto v = detail::parse_double(text);
      if (!v)
        throw DataError("summary file: row " + std::to_string(row) + ", column '" + name +
                        "': cannot parse '" + std::string(detail::trim(text)) + "' as a number");
      return *v;
    };
    auto optional_number = [&](std::optional<std::size_t> col, const std::string& name) -> std::optional<double> {
      if (!col || *col >= cells.size() || detail::is_missing(cells[*col])) return std::nullopt;
      return number(*col, name);
    };
    SnpRecord r;
    r.id = std::string(detail::trim(cell(c_id, columns.id)));
    r.gamma_hat = number(c_g, columns.gamma_hat);
    r.se_x = number(c_sx, columns.se_x);
    r.Gamma_hat = number(c_G, columns.Gamma_hat);
    r.se_y = number(c_sy, columns.se_y);
    r.gamma_star = optional_number(c_gs, columns.gamma_star);
    r.se_x_star = optional_number(c_sxs, columns.se_x_star);
    records.push_back(std::move(r));
  }
  if (records.empty()) throw DataError("summary file has a header but no data rows");
  return SummaryDataset(std::move(records));
}

inline SummaryDataset read_summary_tsv(const std::string& path, const ColumnMap& columns = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open summary file '" + path + "'");
  return read_summary_tsv(in, columns);
}

inline void write_summary_tsv(std::ostream& out, const SummaryDataset& dataset, const ColumnMap& columns = {}) {
  const bool sel = std::any_of(dataset.records().begin(), dataset.records().end(),
                               [](const SnpRecord& r) { return r.gamma_star || r.se_x_star; });
  out << columns.id << '\t' << columns.gamma_hat << '\t' << columns.se_x << '\t' << columns.Gamma_hat << '\t'
      << columns.se_y;
  if (sel) out << '\t' << columns.gamma_star << '\t' << columns.se_x_star;
  out << '\n';
  auto opt = [](const std::optional<double>& v) { return v ? detail::format_double(*v) : std::string("NA"); };
  for (const auto& r : dataset.records()) {
    out << r.id << '\t' << detail::format_double(r.gamma_hat) << '\t' << detail::format_double(r.se_x) << '\t'
        << detail::format_double(r.Gamma_hat) << '\t' << detail::format_double(r.se_y);
    if (sel) out << '\t' << opt(r.gamma_star) << '\t' << opt(r.se_x_star);
    out << '\n';
  }
}

/// Population parameters plus an optional fixed pleiotropy vector, as stored
/// in a parameter file.
struct PopulationFile {
  PopulationParams params;
  std::vector<double> alpha;  // empty when the file has no alpha column
};

// Parameter file: '#'-prefixed "key = value" lines for beta0/tau0, then a TSV
// with columns gamma, sigma_x, sigma_y, sigma_x_star and optionally alpha.
inline PopulationFile read_population_params(std::istream& in) {
  PopulationFile file;
  std::string line;
  std::vector<std::string_view> header;
  std::string header_line;
  std::size_t row = 0;
  std::optional<std::size_t> cg, csx, csy, css, ca;
  while (std::getline(in, line)) {
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      auto body = detail::trim(t.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) continue;
      const auto key = detail::trim(body.substr(0, eq));
      const auto val = detail::parse_double(body.substr(eq + 1));
      if ((key == "beta0" || key == "tau0") && !val)
        throw DataError("parameter file: cannot parse value of '" + std::string(key) + "'");
      if (key == "beta0") file.params.beta0 = *val;
      if (key == "tau0") file.params.tau0 = *val;
      continue;
    }
    if (header.empty()) {
      header_line = std::string(t);
      header = detail::split_tabs(header_line);
      for (std::size_t i = 0; i < header.size(); ++i) {
        const auto h = detail::trim(header[i]);
        if (h == "gamma") cg = i;
        if (h == "sigma_x") csx = i;
        if (h == "sigma_y") csy = i;
        if (h == "sigma_x_star") css = i;
        if (h == "alpha") ca = i;
      }
      if (!cg || !csx || !csy) throw DataError("parameter file: need columns gamma, sigma_x, sigma_y");
      continue;
    }
    ++row;
    const auto cells = detail::split_tabs(t);
    auto number = [&](std::size_t col, const char* name) {
      std::optional<double> v;
      if (col < cells.size()) v = detail::parse_double(cells[col]);
      if (!v) throw DataError("parameter file: row " + std::to_string(row) + ", column '" + name + "' is not a number");
      return *v;
    };
    file.params.gamma.push_back(number(*cg, "gamma"));
    file.params.sigma_x.push_back(number(*csx, "sigma_x"));
    file.params.sigma_y.push_back(number(*csy, "sigma_y"));
    file.params.sigma_x_star.push_back(css ? number(*css, "sigma_x_star") : file.params.sigma_x.back());
    if (ca) file.alpha.push_back(number(*ca, "alpha"));
  }
  if (header.empty()) throw DataError("parameter file is empty");
  file.params.check();
  return file;
}

inline PopulationFile read_population_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open parameter file '" + path + "'");
  return read_population_params(in);
}

inline void write_population_params(std::ostream& out, const PopulationParams& params,
                                    const std::vector<double>& alpha = {}) {
  out << "# beta0 = " << detail::format_double(params.beta0) << '\n';
  out << "# tau0 = " << detail::format_double(params.tau0) << '\n';
  out << "gamma\tsigma_x\tsigma_y\tsigma_x_star" << (alpha.empty() ? "" : "\talpha") << '\n';
  for (std::size_t j = 0; j < params.p(); ++j) {
    out << detail::format_double(params.gamma[j]) << '\t' << detail::format_double(params.sigma_x[j]) << '\t'
        << detail::format_double(params.sigma_y[j]) << '\t' << detail::format_double(params.sigma_x_star[j]);
    if (!alpha.empty()) out << '\t' << detail::format_double(alpha[j]);
    out << '\n';
  }
}

/// Treats a summary file's estimates as population values: gamma from the
/// exposure estimates, sigmas from the reported SEs. This is how a real GWAS
/// pair becomes a simulation population.
inline PopulationParams params_from_summary(const SummaryDataset& dataset, double beta0) {
  if (!dataset.has_selection()) throw ConfigError("params_from_summary: dataset needs selection columns");
  PopulationParams params;
  params.beta0 = beta0;
  for (const auto& r : dataset.records()) {
    params.gamma.push_back(r.gamma_hat);
    params.sigma_x.push_back(r.se_x);
    params.sigma_y.push_back(r.se_y);
    params.sigma_x_star.push_back(*r.se_x_star);
  }
  params.check();
  return params;
}

}  // namespace divw

#endif
