#ifndef COVERT_KALMAN_CONFIG_HPP
#define COVERT_KALMAN_CONFIG_HPP

// JSON experiment configuration. Layout:
//
//   {
//     "model": {"A": [[..]], "B": .., "C": .., "Q": .., "R": .., "x0_mean": [..],
//               "P0": [[..]] | "steady_state"}
//            | {"scenario": "mass_spring", "c1": 1, "c2": 1},
//     "partition": {"S_bar": [[..]], "S": [[..]]} | "full" | "auto_unstable"
//                | {"auto_stable": {"mu_total": 0.2, "mu_inst": 2}},
//     "strategy": {"kind": "stochastic", "varsigma": 0.2 | "auto"}
//               | {"kind": "deterministic", "f": [1, 0, ..] | "auto"}
//               | {"kind": "single", "delta": 1},
//     "run": {"horizon": 300, "trials": 500, "seed": 1, "out": "path", "format": "csv", "key": 42},
//     "analysis": {"delta": 1}
//   }
//
// Every diagnostic names the offending field path, e.g. "model.B[2]".

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "covert_kalman/design.hpp"
#include "covert_kalman/errors.hpp"
#include "covert_kalman/harness.hpp"
#include "covert_kalman/model.hpp"
#include "covert_kalman/schedule.hpp"

namespace covert_kalman {

using nlohmann::json;

enum class PartitionKind { Explicit, Full, AutoUnstable, AutoStable };

struct PartitionSpec {
  PartitionKind kind = PartitionKind::Full;
  Matrix S_bar;
  Matrix S;
  DesignBudget budget;
};

struct StrategySpec {
  std::string kind = "stochastic";
  std::optional<double> varsigma;          ///< empty means "auto" (from the design)
  std::optional<std::vector<std::uint8_t>> f_bits;  ///< empty means "auto"
  std::size_t delta = 1;
};

struct RunSpec {
  std::size_t horizon = 300;
  std::size_t trials = 500;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "csv";
  std::uint64_t key = 0x5eed'c0de'cafe'f00dULL;
};

struct CliConfig {
  SystemModel model;
  std::optional<PartitionSpec> partition;
  std::optional<StrategySpec> strategy;
  RunSpec run;
  std::optional<std::size_t> analysis_delta;
  json raw;
};

namespace detail {

inline const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  if (!obj.contains(key)) throw ConfigError(path + "." + key, "missing field");
  return obj.at(key);
}

inline double number_at(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

inline std::uint64_t count_at(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) throw ConfigError(path, "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

/// Row-major nested array. `cols` may be fixed in advance (>= 0).
inline Matrix matrix_at(const json& j, const std::string& path, Eigen::Index rows = -1, Eigen::Index cols = -1) {
  if (!j.is_array()) throw ConfigError(path, "expected a matrix as an array of rows");
  const auto r = static_cast<Eigen::Index>(j.size());
  if (rows >= 0 && r != rows) {
    throw ConfigError(path, "expected " + std::to_string(rows) + " rows, got " + std::to_string(r));
  }
  Matrix M(r, cols >= 0 ? cols : 0);
  for (Eigen::Index i = 0; i < r; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    const std::string rp = path + "[" + std::to_string(i) + "]";
    if (!row.is_array()) throw ConfigError(rp, "expected a row array");
    const auto c = static_cast<Eigen::Index>(row.size());
    if (i == 0 && cols < 0) {
      cols = c;
      M.resize(r, c);
    }
    if (c != cols) throw ConfigError(rp, "expected " + std::to_string(cols) + " columns, got " + std::to_string(c));
    for (Eigen::Index k = 0; k < c; ++k) {
      M(i, k) = number_at(row[static_cast<std::size_t>(k)], rp + "[" + std::to_string(k) + "]");
    }
  }
  return M;
}

inline Vector vector_at(const json& j, const std::string& path, Eigen::Index size) {
  if (!j.is_array()) throw ConfigError(path, "expected an array");
  if (static_cast<Eigen::Index>(j.size()) != size) {
    throw ConfigError(path, "expected " + std::to_string(size) + " entries, got " + std::to_string(j.size()));
  }
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    v(i) = number_at(j[static_cast<std::size_t>(i)], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

inline SystemModel parse_model(const json& j) {
  const std::string path = "model";
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  if (j.contains("scenario")) {
    const json& sc = j.at("scenario");
    if (!sc.is_string() || sc.get<std::string>() != "mass_spring") {
      throw ConfigError(path + ".scenario", "unknown scenario (supported: mass_spring)");
    }
    return mass_spring_scenario(number_at(require(j, "c1", path), path + ".c1"),
                                number_at(require(j, "c2", path), path + ".c2"));
  }
  SystemModel M;
  M.A = matrix_at(require(j, "A", path), path + ".A");
  const Eigen::Index n = M.A.rows();
  if (M.A.cols() != n || n == 0) throw ConfigError(path + ".A", "must be square and non-empty");
  M.B = matrix_at(require(j, "B", path), path + ".B", n);
  M.C = matrix_at(require(j, "C", path), path + ".C", -1, n);
  const Eigen::Index p = M.B.cols(), m = M.C.rows();
  M.Q = matrix_at(require(j, "Q", path), path + ".Q", p, p);
  M.R = matrix_at(require(j, "R", path), path + ".R", m, m);
  M.x0_mean = j.contains("x0_mean") ? vector_at(j.at("x0_mean"), path + ".x0_mean", n) : Vector::Zero(n);

  bool steady_prior = !j.contains("P0");
  if (j.contains("P0")) {
    const json& p0 = j.at("P0");
    if (p0.is_string()) {
      if (p0.get<std::string>() != "steady_state") throw ConfigError(path + ".P0", "expected a matrix or \"steady_state\"");
      steady_prior = true;
    } else {
      M.P0 = matrix_at(p0, path + ".P0", n, n);
    }
  }
  if (steady_prior) M.P0 = Matrix::Zero(n, n);
  try {
    validate_model(M);
    if (steady_prior) M.P0 = steady_state(M).P_plus;
  } catch (const InvalidModel& e) {
    throw ConfigError(path, e.what());
  }
  return M;
}

inline PartitionSpec parse_partition(const json& j, Eigen::Index m) {
  const std::string path = "partition";
  PartitionSpec spec;
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "full") {
      spec.kind = PartitionKind::Full;
    } else if (s == "auto_unstable") {
      spec.kind = PartitionKind::AutoUnstable;
    } else {
      throw ConfigError(path, "unknown partition mode '" + s + "' (full, auto_unstable, auto_stable, or S_bar/S)");
    }
    return spec;
  }
  if (!j.is_object()) throw ConfigError(path, "expected a string or an object");
  if (j.contains("auto_stable")) {
    const json& b = j.at("auto_stable");
    const std::string bp = path + ".auto_stable";
    spec.kind = PartitionKind::AutoStable;
    spec.budget.mu_total = number_at(require(b, "mu_total", bp), bp + ".mu_total");
    spec.budget.mu_inst = static_cast<int>(count_at(require(b, "mu_inst", bp), bp + ".mu_inst"));
    try {
      spec.budget.validate(m);
    } catch (const InvalidArgument& e) {
      throw ConfigError(bp, e.what());
    }
    return spec;
  }
  spec.kind = PartitionKind::Explicit;
  spec.S_bar = matrix_at(require(j, "S_bar", path), path + ".S_bar", -1, m);
  if (j.contains("S") && !j.at("S").empty()) {
    spec.S = matrix_at(j.at("S"), path + ".S", -1, m);
  } else {
    spec.S = Matrix(0, m);
  }
  try {
    (void)make_partition(spec.S_bar, spec.S);
  } catch (const InvalidPartition& e) {
    throw ConfigError(path, e.what());
  }
  return spec;
}

inline StrategySpec parse_strategy(const json& j) {
  const std::string path = "strategy";
  StrategySpec spec;
  const json& kind = require(j, "kind", path);
  if (!kind.is_string()) throw ConfigError(path + ".kind", "expected a string");
  spec.kind = kind.get<std::string>();
  if (spec.kind == "stochastic") {
    const json& v = require(j, "varsigma", path);
    if (!(v.is_string() && v.get<std::string>() == "auto")) {
      spec.varsigma = number_at(v, path + ".varsigma");
      if (!(*spec.varsigma >= 0.0 && *spec.varsigma <= 1.0)) throw ConfigError(path + ".varsigma", "must lie in [0, 1]");
    }
  } else if (spec.kind == "deterministic") {
    const json& f = require(j, "f", path);
    if (!(f.is_string() && f.get<std::string>() == "auto")) {
      if (!f.is_array() || f.empty()) throw ConfigError(path + ".f", "expected a non-empty 0/1 array or \"auto\"");
      std::vector<std::uint8_t> bits;
      for (std::size_t i = 0; i < f.size(); ++i) {
        const std::uint64_t b = count_at(f[i], path + ".f[" + std::to_string(i) + "]");
        if (b > 1) throw ConfigError(path + ".f[" + std::to_string(i) + "]", "decision bits must be 0 or 1");
        bits.push_back(static_cast<std::uint8_t>(b));
      }
      spec.f_bits = std::move(bits);
    }
  } else if (spec.kind == "single") {
    spec.delta = count_at(require(j, "delta", path), path + ".delta");
    if (spec.delta < 1) throw ConfigError(path + ".delta", "must be >= 1");
  } else {
    throw ConfigError(path + ".kind", "unknown strategy '" + spec.kind + "' (stochastic, deterministic, single)");
  }
  return spec;
}

inline RunSpec parse_run(const json& j) {
  const std::string path = "run";
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  RunSpec run;
  if (j.contains("horizon")) run.horizon = count_at(j.at("horizon"), path + ".horizon");
  if (j.contains("trials")) run.trials = count_at(j.at("trials"), path + ".trials");
  if (j.contains("seed")) run.seed = count_at(j.at("seed"), path + ".seed");
  if (j.contains("key")) run.key = count_at(j.at("key"), path + ".key");
  if (j.contains("out")) {
    if (!j.at("out").is_string()) throw ConfigError(path + ".out", "expected a string");
    run.out = j.at("out").get<std::string>();
  }
  if (j.contains("format")) {
    if (!j.at("format").is_string()) throw ConfigError(path + ".format", "expected a string");
    run.format = j.at("format").get<std::string>();
  }
  if (run.horizon < 1) throw ConfigError(path + ".horizon", "must be >= 1");
  if (run.trials < 1) throw ConfigError(path + ".trials", "must be >= 1");
  if (run.format != "csv" && run.format != "json") throw ConfigError(path + ".format", "expected csv or json");
  return run;
}

}  // namespace detail

inline CliConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("$", "configuration must be a JSON object");
  CliConfig cfg;
  cfg.raw = j;
  cfg.model = detail::parse_model(detail::require(j, "model", "$"));
  if (j.contains("partition")) cfg.partition = detail::parse_partition(j.at("partition"), cfg.model.m());
  if (j.contains("strategy")) cfg.strategy = detail::parse_strategy(j.at("strategy"));
  if (j.contains("run")) cfg.run = detail::parse_run(j.at("run"));
  if (j.contains("analysis")) {
    const json& a = j.at("analysis");
    if (!a.is_object()) throw ConfigError("analysis", "expected an object");
    if (a.contains("delta")) {
      cfg.analysis_delta = detail::count_at(a.at("delta"), "analysis.delta");
      if (*cfg.analysis_delta < 1) throw ConfigError("analysis.delta", "must be >= 1");
    }
  }
  return cfg;
}

inline CliConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(path, "cannot open configuration file");
  json j;
  try {
    f >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(path, std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

/// The partition together with whichever design produced it.
struct ResolvedPartition {
  EncryptionPartition partition;
  std::optional<OptimalParams> stable;
  std::optional<DeterministicDesign> deterministic;
  std::optional<UnstableDesign> unstable;
};

inline ResolvedPartition resolve_partition(const CliConfig& cfg) {
  if (!cfg.partition) throw ConfigError("partition", "missing field");
  const PartitionSpec& spec = *cfg.partition;
  switch (spec.kind) {
    case PartitionKind::Explicit:
      return {make_partition(spec.S_bar, spec.S), {}, {}, {}};
    case PartitionKind::Full:
      return {EncryptionPartition::full(cfg.model.m()), {}, {}, {}};
    case PartitionKind::AutoUnstable: {
      UnstableDesign d;
      try {
        d = design_unstable(cfg.model);
      } catch (const NotApplicable& e) {
        throw ConfigError("partition", e.what());
      }
      EncryptionPartition part = d.partition();
      return {std::move(part), {}, {}, std::move(d)};
    }
    case PartitionKind::AutoStable: {
      DeterministicDesign d;
      try {
        d = design_stable_deterministic(spec.budget, cfg.model);
      } catch (const UnstableOperator& e) {
        throw ConfigError("partition.auto_stable", e.what());
      }
      EncryptionPartition part = d.params.partition();
      OptimalParams p = d.params;
      return {std::move(part), std::move(p), std::move(d), {}};
    }
  }
  throw ConfigError("partition", "unhandled partition kind");
}

inline Strategy resolve_strategy(const CliConfig& cfg, const ResolvedPartition& resolved) {
  if (!cfg.strategy) throw ConfigError("strategy", "missing field");
  const StrategySpec& s = *cfg.strategy;
  if (s.kind == "stochastic") {
    if (s.varsigma) return Stochastic{*s.varsigma};
    if (!resolved.stable) throw ConfigError("strategy.varsigma", "\"auto\" needs partition.auto_stable");
    return Stochastic{resolved.stable->frequency};
  }
  if (s.kind == "deterministic") {
    if (s.f_bits) return Deterministic{*s.f_bits};
    if (!resolved.deterministic) throw ConfigError("strategy.f", "\"auto\" needs partition.auto_stable");
    return Deterministic{resolved.deterministic->f_bits};
  }
  return Single{s.delta};
}

inline ScenarioConfig make_scenario(const CliConfig& cfg) {
  ResolvedPartition resolved = resolve_partition(cfg);
  Strategy strategy = resolve_strategy(cfg, resolved);
  ScenarioConfig sc{cfg.model,   std::move(resolved.partition), std::move(strategy), cfg.run.horizon,
                    cfg.run.trials, cfg.run.seed,               CipherKey{cfg.run.key}};
  sc.validate();
  return sc;
}

}  // namespace covert_kalman

#endif  // COVERT_KALMAN_CONFIG_HPP
