#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "covert_kalman/harness.hpp"

using namespace covert_kalman;

namespace {

ScenarioConfig stable_design_scenario(std::size_t horizon, std::size_t trials, std::uint64_t seed) {
  const SystemModel M = mass_spring_scenario(1.0, 1.0);
  const OptimalParams p = design_stable_stochastic({0.2, 2}, M);
  return ScenarioConfig{M, p.partition(), Stochastic{p.frequency}, horizon, trials, seed};
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("covert_kalman_harness_" + name);
}

class ThreadsEnv {
 public:
  explicit ThreadsEnv(const char* value) {
    if (const char* old = std::getenv("COVERT_KALMAN_THREADS")) saved_ = old;
    setenv("COVERT_KALMAN_THREADS", value, 1);
  }
  ~ThreadsEnv() {
    if (saved_) {
      setenv("COVERT_KALMAN_THREADS", saved_->c_str(), 1);
    } else {
      unsetenv("COVERT_KALMAN_THREADS");
    }
  }

 private:
  std::optional<std::string> saved_;
};

}  // namespace

TEST(MassSpring, SpectralRadiiAndValidity) {
  const SystemModel stable = mass_spring_scenario(1.0, 1.0);
  const SystemModel unstable = mass_spring_scenario(-1.0, -1.0);
  EXPECT_LT(spectral_radius(stable.A), 1.0);
  EXPECT_GT(spectral_radius(unstable.A), 1.0);
  EXPECT_NO_THROW(validate_model(stable));
  EXPECT_EQ(stable.n(), 4);
  EXPECT_EQ(stable.m(), 2);
  EXPECT_LE((stable.P0 - steady_state(stable).P_plus).norm(), 1e-9);
}

TEST(RunClosedLoop, UserTracksSensorExactly) {
  const ScenarioConfig cfg = stable_design_scenario(100, 1, 3);
  const TrialResult r = run_closed_loop(cfg, 3);
  EXPECT_EQ(r.max_user_sensor_gap, 0.0);
  EXPECT_GE(r.min_floor_margin, -1e-9);
}

TEST(RunClosedLoop, NeverEncryptingLeavesNoGap) {
  ScenarioConfig cfg = stable_design_scenario(80, 1, 4);
  cfg.strategy = Stochastic{0.0};
  const TrialResult r = run_closed_loop(cfg, 4);
  for (std::size_t k = 0; k < cfg.horizon; ++k) EXPECT_NEAR(r.eav_sq_err[k], r.user_sq_err[k], 1e-9 * (1.0 + r.user_sq_err[k]));
}

TEST(MonteCarlo, UnstablePlantEavesdropperErrorGrows) {
  const SystemModel M = mass_spring_scenario(-1.0, -1.0);
  const ScenarioConfig cfg{M, design_unstable(M).partition(), Stochastic{0.1}, 200, 64, 5};
  const AggregateMSE agg = monte_carlo(cfg);
  EXPECT_GT(agg.eav_mse.back(), 100.0 * agg.user_mse.back());
  EXPECT_EQ(agg.max_user_sensor_gap, 0.0);
  EXPECT_GT(agg.eav_theory.back(), agg.eav_theory[99]);
  EXPECT_TRUE(agg.floor_violations.empty());
}

TEST(MonteCarlo, BitwiseReproducible) {
  const ScenarioConfig cfg = stable_design_scenario(40, 100, 11);
  const AggregateMSE a = monte_carlo(cfg);
  const AggregateMSE b = monte_carlo(cfg);
  EXPECT_EQ(a.user_mse, b.user_mse);
  EXPECT_EQ(a.eav_mse, b.eav_mse);
  ScenarioConfig other = cfg;
  other.seed = 12;
  EXPECT_NE(monte_carlo(other).eav_mse, a.eav_mse);
}

TEST(MonteCarlo, IndependentOfWorkerCount) {
  const ScenarioConfig cfg = stable_design_scenario(30, 200, 13);
  AggregateMSE one, four;
  {
    ThreadsEnv env("1");
    one = monte_carlo(cfg);
  }
  {
    ThreadsEnv env("4");
    four = monte_carlo(cfg);
  }
  EXPECT_EQ(one.user_mse, four.user_mse);
  EXPECT_EQ(one.eav_mse, four.eav_mse);
}

TEST(MonteCarlo, TheoryCurveShape) {
  const ScenarioConfig cfg = stable_design_scenario(25, 1, 1);
  const AggregateMSE agg = monte_carlo(cfg);
  EXPECT_EQ(agg.horizon(), 25u);
  EXPECT_EQ(agg.eav_theory.size(), 25u);
  EXPECT_EQ(agg.trials, 1u);
}

TEST(MonteCarlo, RejectsBadScenario) {
  ScenarioConfig cfg = stable_design_scenario(0, 1, 1);
  EXPECT_THROW(monte_carlo(cfg), InvalidArgument);
  cfg = stable_design_scenario(5, 1, 1);
  cfg.partition = EncryptionPartition::full(3);
  EXPECT_THROW(monte_carlo(cfg), InvalidArgument);
}

TEST(Export, CsvHasOneRowPerStep) {
  const AggregateMSE agg = monte_carlo(stable_design_scenario(17, 8, 2));
  const auto path = temp_path("rows.csv");
  export_results(agg, path.string(), ExportFormat::Csv);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "k,user_mse,eav_mse,eav_theory");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::size_t cells = 0;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      EXPECT_NO_THROW((void)std::stod(cell, &used));
      EXPECT_EQ(used, cell.size());
      ++cells;
    }
    EXPECT_EQ(cells, 4u);
    ++rows;
  }
  EXPECT_EQ(rows, 17u);
  std::filesystem::remove(path);
}

TEST(Export, JsonRoundTripIsExact) {
  const AggregateMSE agg = monte_carlo(stable_design_scenario(12, 8, 6));
  const auto path = temp_path("round.json");
  export_results(agg, path.string(), ExportFormat::Json, {{"note", "x"}});
  const AggregateMSE back = load_results_json(path.string());
  EXPECT_EQ(back.user_mse, agg.user_mse);
  EXPECT_EQ(back.eav_mse, agg.eav_mse);
  EXPECT_EQ(back.eav_theory, agg.eav_theory);
  std::filesystem::remove(path);
}

TEST(Export, FormatParsing) {
  EXPECT_EQ(parse_export_format("csv"), ExportFormat::Csv);
  EXPECT_EQ(parse_export_format("json"), ExportFormat::Json);
  EXPECT_THROW(parse_export_format("xml"), Error);
}
