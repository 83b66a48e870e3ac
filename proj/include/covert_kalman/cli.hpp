#ifndef COVERT_KALMAN_CLI_HPP
#define COVERT_KALMAN_CLI_HPP

// Command-line front end. Exit codes: 0 success, 1 configuration or usage
// error, 2 numerical failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "covert_kalman/config.hpp"
#include "covert_kalman/design.hpp"
#include "covert_kalman/harness.hpp"
#include "covert_kalman/report.hpp"

namespace covert_kalman {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitNumerical = 2 };

struct CliOverrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> horizon;
};

namespace detail {

inline CliConfig load_with_overrides(const CliOverrides& o) {
  if (o.config.empty()) throw ConfigError("--config", "no configuration file given");
  CliConfig cfg = load_config(o.config);
  if (o.seed) cfg.run.seed = *o.seed;
  if (o.out) cfg.run.out = *o.out;
  if (o.format) {
    if (*o.format != "csv" && *o.format != "json") throw ConfigError("--format", "expected csv or json");
    cfg.run.format = *o.format;
  }
  if (o.trials) cfg.run.trials = *o.trials;
  if (o.horizon) cfg.run.horizon = *o.horizon;
  if (cfg.run.trials < 1) throw ConfigError("--trials", "must be >= 1");
  if (cfg.run.horizon < 1) throw ConfigError("--horizon", "must be >= 1");
  return cfg;
}

inline void emit_json(const nlohmann::json& j, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(out_path);
  if (!f) throw Error("cannot open '" + out_path + "' for writing");
  f << j.dump(2) << '\n';
  out << "wrote " << out_path << '\n';
}

inline int cmd_validate(const CliOverrides& o, std::ostream& out) {
  const CliConfig cfg = load_with_overrides(o);
  const SystemModel& M = cfg.model;
  nlohmann::json j = {{"valid", true},
                      {"n", M.n()},
                      {"m", M.m()},
                      {"p", M.p()},
                      {"rho", spectral_radius(M.A)},
                      {"stabilizable", true},
                      {"detectable", true}};
  if (cfg.partition) {
    const ResolvedPartition rp = resolve_partition(cfg);
    j["partition"] = {{"m_bar", rp.partition.m_bar()},
                      {"condition_number", rp.partition.condition_number()},
                      {"ill_conditioned", rp.partition.ill_conditioned()}};
  }
  out << j.dump(2) << '\n';
  return kExitOk;
}

inline int cmd_design(const CliOverrides& o, std::ostream& out) {
  const CliConfig cfg = load_with_overrides(o);
  nlohmann::json j;
  const bool stable_budget = cfg.partition && cfg.partition->kind == PartitionKind::AutoStable;
  if (stable_budget) {
    const DesignBudget& b = cfg.partition->budget;
    const OptimalParams stochastic = design_stable_stochastic(b, cfg.model);
    const DeterministicDesign deterministic = design_stable_deterministic(b, cfg.model);
    j["kind"] = "stable";
    j["m_bar"] = stochastic.m_bar;
    j["frequency"] = stochastic.frequency;
    j["stochastic"] = to_json(stochastic);
    j["deterministic"] = to_json(deterministic);
  } else if (spectral_radius(cfg.model.A) >= 1.0) {
    j = to_json(design_unstable(cfg.model));
    j["kind"] = "unstable";
  } else {
    throw ConfigError("partition.auto_stable", "a stable plant needs a design budget {mu_total, mu_inst}");
  }
  emit_json(j, o.out.value_or(""), out);
  return kExitOk;
}

inline int cmd_analyze(const CliOverrides& o, std::ostream& out) {
  const CliConfig cfg = load_with_overrides(o);
  const SystemModel& M = cfg.model;
  const SteadyState ss = steady_state(M);
  AnalysisReport report;
  report.rho = spectral_radius(M.A);
  report.N = ss.N;
  report.limits.emplace_back("P_minus", ss.P_minus);
  report.limits.emplace_back("P_plus", ss.P_plus);

  if (cfg.partition) {
    const ResolvedPartition rp = resolve_partition(cfg);
    report.optimal = rp.stable;
    report.verdict = boundedness_check(rp.partition, M);
    if (cfg.strategy && report.rho < 1.0) {
      const Strategy strategy = resolve_strategy(cfg, rp);
      if (const auto* s = std::get_if<Stochastic>(&strategy); s && s->varsigma > 0.0) {
        report.limits.emplace_back("expected_stochastic", *expected_cov_stochastic(s->varsigma, rp.partition, M, 1).limit);
      } else if (const auto* d = std::get_if<Deterministic>(&strategy); d && d->ones() > 0 && d->period() <= 100) {
        for (std::size_t phase = 1; phase <= d->period(); ++phase) {
          report.limits.emplace_back("periodic_phase_" + std::to_string(phase),
                                     periodic_limit(rp.partition, d->f_bits, phase, M));
        }
      }
    }
  }
  std::optional<std::size_t> delta = cfg.analysis_delta;
  if (!delta && cfg.strategy && cfg.strategy->kind == "single") delta = cfg.strategy->delta;
  if (delta) {
    report.delta = *delta;
    report.single = single_strategy_check(*delta, M);
  }
  emit_json(to_json(report), o.out.value_or(""), out);
  return kExitOk;
}

inline int cmd_simulate(const CliOverrides& o, std::ostream& out) {
  const CliConfig cfg = load_with_overrides(o);
  const ScenarioConfig sc = make_scenario(cfg);
  const AggregateMSE agg = monte_carlo(sc);
  const ExportFormat fmt = parse_export_format(cfg.run.format);
  if (cfg.run.out.empty()) {
    if (fmt == ExportFormat::Csv) {
      out << results_to_csv(agg);
    } else {
      out << results_to_json(agg, cfg.raw).dump(2) << '\n';
    }
  } else {
    export_results(agg, cfg.run.out, fmt, cfg.raw);
    out << "wrote " << cfg.run.out << '\n';
  }
  return kExitOk;
}

struct ReproduceRun {
  std::string name;
  ScenarioConfig scenario;
};

/// The benchmark configurations: fig3 (unstable plant, one run per strategy
/// plus an unencrypted baseline), fig4 (stable plant with the optimal
/// budgeted design) and fig5 (fig3 plus successive encryption and full-state
/// low-frequency encryption at the same consumption).
inline std::vector<ReproduceRun> reproduce_runs(const std::string& figure, std::size_t horizon, std::size_t trials,
                                                std::uint64_t seed) {
  std::vector<ReproduceRun> runs;
  auto add = [&](std::string name, const SystemModel& M, EncryptionPartition part, Strategy strategy) {
    runs.push_back({std::move(name), ScenarioConfig{M, std::move(part), std::move(strategy), horizon, trials, seed}});
  };
  std::vector<std::uint8_t> every_tenth(10, 0);
  every_tenth[0] = 1;

  if (figure == "fig3" || figure == "fig5") {
    const SystemModel M = mass_spring_scenario(-1.0, -1.0);
    const EncryptionPartition unstable_part = design_unstable(M).partition();
    const EncryptionPartition full = EncryptionPartition::full(M.m());
    add("stochastic", M, unstable_part, Stochastic{0.1});
    add("deterministic", M, unstable_part, Deterministic{every_tenth});
    add("single", M, full, Single{1});
    add("user_baseline", M, unstable_part, Stochastic{0.0});
    if (figure == "fig5") {
      add("successive", M, unstable_part, Deterministic{{1}});
      add("full_state_low_frequency", M, full, Stochastic{0.05});
    }
  } else if (figure == "fig4") {
    const SystemModel M = mass_spring_scenario(1.0, 1.0);
    const DeterministicDesign d = design_stable_deterministic({0.2, 2}, M);
    const EncryptionPartition part = d.params.partition();
    add("stochastic", M, part, Stochastic{d.params.frequency});
    add("deterministic", M, part, Deterministic{d.f_bits});
    add("single", M, EncryptionPartition::full(M.m()), Single{1});
    add("user_baseline", M, part, Stochastic{0.0});
  } else {
    throw ConfigError("figure", "unknown figure '" + figure + "' (fig3, fig4, fig5)");
  }
  return runs;
}

inline int cmd_reproduce(const std::string& figure, const CliOverrides& o, std::ostream& out) {
  if (!o.out) throw ConfigError("--out", "reproduce needs an output directory");
  const std::string fmt_name = o.format.value_or("csv");
  const ExportFormat fmt = parse_export_format(fmt_name);
  const std::vector<ReproduceRun> runs =
      reproduce_runs(figure, o.horizon.value_or(300), o.trials.value_or(500), o.seed.value_or(1));
  std::filesystem::create_directories(*o.out);
  for (const ReproduceRun& run : runs) {
    const AggregateMSE agg = monte_carlo(run.scenario);
    const std::string path = (std::filesystem::path(*o.out) / (figure + "_" + run.name + "." + fmt_name)).string();
    nlohmann::json echo = {{"figure", figure},
                           {"run", run.name},
                           {"horizon", run.scenario.horizon},
                           {"trials", run.scenario.trials},
                           {"seed", run.scenario.seed}};
    export_results(agg, path, fmt, echo);
    out << "wrote " << path << '\n';
  }
  return kExitOk;
}

}  // namespace detail

/// Runs the command line `args` (args[0] is the program name).
inline int execute(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Intermittent innovation encryption against eavesdropping: design, analysis, simulation"};
  app.require_subcommand(1);
  CliOverrides o;
  std::string figure;
  std::string positional;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("cfg", positional, "Configuration file (JSON)");
    sub->add_option("--config", o.config, "Configuration file (JSON)");
    sub->add_option("--seed", o.seed, "Override run.seed");
    sub->add_option("--out", o.out, "Output path");
    sub->add_option("--format", o.format, "csv or json");
    sub->add_option("--trials", o.trials, "Override run.trials");
    sub->add_option("--horizon", o.horizon, "Override run.horizon");
  };
  CLI::App* validate = app.add_subcommand("validate", "Check a model (and partition) configuration");
  CLI::App* design = app.add_subcommand("design", "Emit the optimal or unstable-case encryption design");
  CLI::App* analyze = app.add_subcommand("analyze", "Steady states, boundedness and single-strategy verdicts");
  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo run with CSV/JSON export");
  CLI::App* reproduce = app.add_subcommand("reproduce", "Run the mass-spring benchmark figures");
  for (CLI::App* sub : {validate, design, analyze, simulate}) add_common(sub);
  reproduce->add_option("figure", figure, "fig3, fig4 or fig5")->required();
  reproduce->add_option("--out", o.out, "Output directory")->required();
  reproduce->add_option("--seed", o.seed, "Base seed");
  reproduce->add_option("--format", o.format, "csv or json");
  reproduce->add_option("--trials", o.trials, "Trials per run");
  reproduce->add_option("--horizon", o.horizon, "Steps per run");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kExitOk;
    if (e.get_name() != "CallForHelp") err << app.help();
    return kExitConfig;
  }
  if (o.config.empty()) o.config = positional;

  try {
    if (*validate) return detail::cmd_validate(o, out);
    if (*design) return detail::cmd_design(o, out);
    if (*analyze) return detail::cmd_analyze(o, out);
    if (*simulate) return detail::cmd_simulate(o, out);
    if (*reproduce) return detail::cmd_reproduce(figure, o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidModel& e) {
    err << "invalid model: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidPartition& e) {
    err << "invalid partition: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NotApplicable& e) {
    err << "not applicable: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const UnstableOperator& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ModelInconsistency& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "unexpected failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  err << app.help();
  return kExitConfig;
}

}  // namespace covert_kalman

#endif  // COVERT_KALMAN_CLI_HPP
