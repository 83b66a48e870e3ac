#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "covert_kalman/cli.hpp"

using namespace covert_kalman;
namespace fs = std::filesystem;

namespace {

const std::string kConfigDir = COVERT_KALMAN_CONFIG_DIR;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "covert_kalman_cli");
  std::ostringstream out, err;
  const int code = execute(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("covert_kalman_cli_" + name);
  fs::remove_all(p);
  return p;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

}  // namespace

TEST(Cli, ValidateShippedConfigs) {
  for (const auto& entry : fs::directory_iterator(kConfigDir)) {
    const CliRun r = run({"validate", entry.path().string()});
    EXPECT_EQ(r.code, 0) << entry.path() << r.err;
  }
}

TEST(Cli, SimulateWritesOneRowPerStep) {
  const fs::path out = scratch("sim.csv");
  const CliRun r = run({"simulate", kConfigDir + "/stable_stochastic.json", "--horizon", "20", "--trials", "16", "--out",
                     out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(out), 21u);
  fs::remove(out);
}

TEST(Cli, SimulateIsDeterministicForFixedSeed) {
  const std::vector<std::string> args{"simulate", "--config", kConfigDir + "/explicit_model.json", "--trials", "32",
                                      "--seed", "9"};
  const CliRun a = run(args), b = run(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, DesignStableBudget) {
  const CliRun r = run({"design", kConfigDir + "/stable_stochastic.json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const nlohmann::json j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("kind"), "stable");
  EXPECT_EQ(j.at("m_bar"), 1);
  EXPECT_NEAR(j.at("frequency").get<double>(), 0.2, 1e-15);
  EXPECT_EQ(j.at("deterministic").at("f").size(), 5u);
}

TEST(Cli, DesignUnstablePlant) {
  const CliRun r = run({"design", kConfigDir + "/unstable_stochastic.json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const nlohmann::json j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("kind"), "unstable");
  EXPECT_EQ(j.at("S_bar").size(), 1u);
}

TEST(Cli, AnalyzeUnstablePlant) {
  const CliRun r = run({"analyze", kConfigDir + "/unstable_stochastic.json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const nlohmann::json j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("verdict").at("verdict"), "diverged");
  EXPECT_EQ(j.at("single_strategy").at("unbounded"), "yes");
  EXPECT_GT(j.at("rho").get<double>(), 1.0);
}

TEST(Cli, AnalyzeStablePlant) {
  const CliRun r = run({"analyze", kConfigDir + "/stable_deterministic.json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const nlohmann::json j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("verdict").at("verdict"), "converged");
  EXPECT_TRUE(j.at("limits").contains("periodic_phase_1"));
  EXPECT_EQ(j.at("optimal").at("m_bar"), 1);
}

TEST(Cli, MalformedDimensionsNameTheField) {
  const fs::path cfg = scratch("bad.json");
  write_file(cfg, R"({"model": {"A": [[0.5, 0], [0, 0.5]], "B": [[1, 0], [0, 1], [1, 1]],
    "C": [[1, 0]], "Q": [[1, 0], [0, 1]], "R": [[1]], "x0_mean": [0, 0]}})");
  const CliRun r = run({"validate", cfg.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("model.B"), std::string::npos) << r.err;
  fs::remove(cfg);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"validate"}).code, 1);
  EXPECT_EQ(run({"validate", "/nonexistent/config.json"}).code, 1);
  EXPECT_EQ(run({"simulate", kConfigDir + "/explicit_model.json", "--format", "xml"}).code, 1);
  EXPECT_EQ(run({"reproduce", "fig9", "--out", scratch("fig9").string()}).code, 1);
}

TEST(Cli, NumericalFailureExitCode) {
  // stable-case design request on an unstable plant
  const fs::path cfg = scratch("unstable_budget.json");
  write_file(cfg, R"({"model": {"scenario": "mass_spring", "c1": -1, "c2": -1},
    "partition": {"auto_stable": {"mu_total": 0.2, "mu_inst": 2}}})");
  const CliRun r = run({"design", cfg.string()});
  EXPECT_EQ(r.code, 2) << r.err;
  fs::remove(cfg);
}

TEST(Cli, ReproduceFig3) {
  const fs::path dir = scratch("fig3");
  const CliRun r = run({"reproduce", "fig3", "--out", dir.string(), "--horizon", "120", "--trials", "16"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    ++files;
    EXPECT_EQ(count_lines(e.path()), 121u);
  }
  EXPECT_EQ(files, 4u);

  const fs::path json_dir = scratch("fig3_json");
  ASSERT_EQ(run({"reproduce", "fig3", "--out", json_dir.string(), "--horizon", "120", "--trials", "16", "--format",
                 "json"})
                .code,
            0);
  for (const std::string name : {"stochastic", "deterministic", "single"}) {
    const AggregateMSE agg = load_results_json((json_dir / ("fig3_" + name + ".json")).string());
    EXPECT_GT(agg.eav_theory.back(), 10.0 * agg.eav_theory[19]) << name;
  }
  const AggregateMSE base = load_results_json((json_dir / "fig3_user_baseline.json").string());
  EXPECT_LT(base.eav_theory.back(), 2.0 * base.eav_theory[19]);
  fs::remove_all(dir);
  fs::remove_all(json_dir);
}
