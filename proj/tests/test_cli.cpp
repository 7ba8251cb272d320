#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "../tools/commands.hpp"
#include "divw/numerics.hpp"
#include "divw/simulation.hpp"
#include "test_util.hpp"

using namespace divw;
using namespace divw::cli;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("divw_test_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name, const std::string& content) const {
    const auto p = (path_ / name).string();
    std::ofstream(p) << content;
    return p;
  }
  std::string path(const std::string& name) const { return (path_ / name).string(); }

private:
  fs::path path_;
};

const char* kHeader = "SNP\tbeta.exposure\tse.exposure\tbeta.outcome\tse.outcome\n";

int run_tool(const std::string& args) {
  const std::string cmd = std::string(DIVW_BINARY) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Analyze, OneSnpBothMethods) {
  TempDir dir;
  AnalyzeOptions opt;
  opt.input = dir.file("one.tsv", std::string(kHeader) + "rs1\t2\t1\t1\t1\n");
  opt.method = "both";
  opt.lambda = "none";
  std::ostringstream out;
  EXPECT_EQ(cmd_analyze(opt, out), 0);
  const auto doc = nlohmann::json::parse(out.str());
  ASSERT_EQ(doc["estimates"].size(), 2u);
  EXPECT_EQ(doc["estimates"][0]["method"], "IVW");
  EXPECT_NEAR(doc["estimates"][0]["beta_hat"].get<double>(), 0.5, 5e-4);
  EXPECT_EQ(doc["estimates"][1]["method"], "dIVW");
  EXPECT_NEAR(doc["estimates"][1]["beta_hat"].get<double>(), 0.667, 5e-4);
  EXPECT_EQ(doc["input"]["p"], 1);
  EXPECT_EQ(doc["input"]["sha256"].get<std::string>().size(), 64u);
}

TEST(Analyze, TextAndCsvFormats) {
  TempDir dir;
  AnalyzeOptions opt;
  opt.input = dir.file("one.tsv", std::string(kHeader) + "rs1\t2\t1\t1\t1\n");
  opt.format = Format::csv;
  std::ostringstream csv;
  cmd_analyze(opt, csv);
  EXPECT_EQ(csv.str().rfind("method,", 0), 0u);
  EXPECT_NE(csv.str().find("dIVW,false,0,0.66666666666666663"), std::string::npos);
  opt.format = Format::text;
  std::ostringstream text;
  cmd_analyze(opt, text);
  EXPECT_NE(text.str().find("0.6667"), std::string::npos);
}

TEST(Analyze, ValidationErrorNamesSnpAndField) {
  TempDir dir;
  AnalyzeOptions opt;
  opt.input = dir.file("bad.tsv", std::string(kHeader) + "rs1\t2\t1\t1\t1\nrs7\t2\t0\t1\t1\n");
  std::ostringstream out;
  try {
    cmd_analyze(opt, out);
    FAIL();
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("rs7"), std::string::npos) << msg;
    EXPECT_NE(msg.find("se_x"), std::string::npos) << msg;
  }
}

TEST(Sha256, KnownVector) {
  TempDir dir;
  EXPECT_EQ(sha256_file(dir.file("abc", "abc")),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(ExitCodes, Contract) {
  TempDir dir;
  const auto good = dir.file("good.tsv", std::string(kHeader) + "rs1\t2\t1\t1\t1\n");
  const auto weak = dir.file("weak.tsv", std::string(kHeader) + "rs1\t0.1\t1\t1\t1\n");
  const auto na = dir.file("na.tsv", std::string(kHeader) + "rs1\tNA\t1\t1\t1\n");
  EXPECT_EQ(run_tool("analyze " + good), 0);
  EXPECT_EQ(run_tool("--help"), 0);
  EXPECT_EQ(run_tool("analyze"), 1);
  EXPECT_EQ(run_tool("analyze " + good + " --bogus"), 1);
  EXPECT_EQ(run_tool("analyze " + good + " --lambda nonsense"), 1);
  EXPECT_EQ(run_tool("analyze " + dir.path("missing.tsv")), 2);
  EXPECT_EQ(run_tool("analyze " + na), 2);
  EXPECT_EQ(run_tool("analyze " + weak + " --method divw"), 3);
  EXPECT_EQ(run_tool("simulate --case 99"), 1);
  EXPECT_EQ(run_tool("simulate --config " + dir.file("bad.cfg", "colour = red\n")), 1);
  EXPECT_EQ(run_tool("oracle --params " + dir.file("bad.params", "gamma\tsigma_x\n1\tx\n")), 2);
}

TEST(Diagnose, SingleSnpWarns) {
  TempDir dir;
  DiagnoseOptions opt;
  opt.input = dir.file("one.tsv", std::string(kHeader) + "rs1\t2\t1\t1\t1\n");
  std::ostringstream out;
  EXPECT_EQ(cmd_diagnose(opt, out), 0);
  const auto doc = nlohmann::json::parse(out.str());
  EXPECT_EQ(doc["diagnostics"]["qq"].size(), 1u);
  EXPECT_EQ(doc["diagnostics"]["status"], "WARN");
  EXPECT_EQ(doc["diagnostics"]["qq"][0]["theoretical"].get<double>(), 0.0);
}

TEST(Diagnose, ResidualsPairedWithQuantiles) {
  std::mt19937_64 rng(3);
  const auto d = divw::testing::random_dataset(rng, 101);
  const auto qq = qq_residuals(d, false);
  ASSERT_EQ(qq.residual.size(), 101u);
  EXPECT_TRUE(std::is_sorted(qq.residual.begin(), qq.residual.end()));
  for (std::size_t i = 0; i < 101; ++i)
    EXPECT_DOUBLE_EQ(qq.theoretical[i], normal_quantile((static_cast<double>(i) + 0.5) / 101.0));
}

// Under the no-pleiotropy sampling model the standardized residuals are
// close to N(0, 1): the KS statistic stays below the 1% critical value in at
// least 95% of 200 datasets.
TEST(Diagnose, ResidualsPassKolmogorovSmirnov) {
  PopulationParams pp;
  std::mt19937_64 prng(17);
  std::normal_distribution<double> n01;
  const std::size_t p = 500;
  for (std::size_t j = 0; j < p; ++j) {
    pp.gamma.push_back(0.05 * n01(prng));
    pp.sigma_x.push_back(0.01);
    pp.sigma_y.push_back(0.01);
    pp.sigma_x_star.push_back(0.01);
  }
  pp.beta0 = 0.4;
  const double n = static_cast<double>(p);
  const double crit = 1.6276 / (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n));
  int pass = 0;
  for (int rep = 0; rep < 200; ++rep) {
    SplitMix64 rng(stream_key(2024, {static_cast<std::uint64_t>(rep)}));
    const auto d = sim::gen_summary_level(pp, {}, rng);
    const auto qq = qq_residuals(d, false);
    double ks = 0;
    for (std::size_t i = 0; i < p; ++i) {
      const double f = normal_cdf(qq.residual[i]);
      ks = std::max({ks, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    pass += ks < crit;
  }
  EXPECT_GE(pass, 190);
}

TEST(Simulate, ByteIdenticalAcrossWorkerCounts) {
  TempDir dir;
  const auto cfg = dir.file("small.cfg",
                            "n = 800\np = 80\ns = 40\nh2 = 0.3\nreplications = 6\nseed = 7\n");
  const auto a = dir.path("a.csv"), b = dir.path("b.csv"), c = dir.path("c.csv");
  ASSERT_EQ(run_tool("-o " + a + " simulate --config " + cfg + " --workers 1"), 0);
  ASSERT_EQ(run_tool("-o " + b + " simulate --config " + cfg + " --workers 4"), 0);
  ASSERT_EQ(run_tool("-o " + c + " simulate --config " + cfg + " --workers 4"), 0);
  EXPECT_FALSE(slurp(a).empty());
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_EQ(slurp(b), slurp(c));
}

TEST(Simulate, SeedOverrideChangesOutput) {
  SimulateOptions opt;
  opt.case_name = "s1";
  opt.replications = 3;
  opt.workers = 1;
  opt.methods = "divw:0";
  std::ostringstream a, b;
  opt.seed = 1;
  cmd_simulate(opt, a);
  opt.seed = 2;
  cmd_simulate(opt, b);
  EXPECT_NE(a.str(), b.str());
}

TEST(Oracle, UnitStrengthAndLambdaZero) {
  TempDir dir;
  std::ostringstream params;
  params << "# beta0 = 0.4\ngamma\tsigma_x\tsigma_y\tsigma_x_star\n";
  for (int j = 0; j < 10; ++j) params << "0.2\t0.2\t0.1\t0.2\n";
  OracleOptions opt;
  opt.params_path = dir.file("unit.params", params.str());
  opt.format = Format::json;
  std::ostringstream out;
  EXPECT_EQ(cmd_oracle(opt, out), 0);
  const auto doc = nlohmann::json::parse(out.str());
  EXPECT_EQ(doc["kappa"].get<double>(), 1.0);
  EXPECT_EQ(doc["kappa_lambda"].get<double>(), doc["kappa"].get<double>());
  EXPECT_EQ(doc["p_lambda"].get<double>(), 10.0);
  std::ostringstream text;
  opt.format = Format::text;
  cmd_oracle(opt, text);
  EXPECT_NE(text.str().find("kappa"), std::string::npos);
}
