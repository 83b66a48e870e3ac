#ifndef COVERT_KALMAN_HARNESS_HPP
#define COVERT_KALMAN_HARNESS_HPP

// Closed-loop simulation: ground truth, sensor filter, encryption channel,
// legitimate user and eavesdropper; Monte Carlo aggregation and export.
//
// Trial i uses seed base + i. Within a trial, sub-streams are derived with
// derive_seed(trial_seed, {label}): 1 = initial state and noises,
// 2 = stochastic schedule. Trials are summed in fixed chunks of 64 in trial
// order, so results do not depend on the worker count.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "json.hpp"

#include "covert_kalman/crypto.hpp"
#include "covert_kalman/design.hpp"
#include "covert_kalman/eavesdropper.hpp"
#include "covert_kalman/model.hpp"
#include "covert_kalman/schedule.hpp"

namespace covert_kalman {

struct ScenarioConfig {
  SystemModel model;
  EncryptionPartition partition;
  Strategy strategy;
  std::size_t horizon = 1;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  CipherKey key{0x5eed'c0de'cafe'f00dULL};

  void validate() const {
    if (horizon < 1) throw InvalidArgument("scenario horizon must be >= 1");
    if (trials < 1) throw InvalidArgument("scenario needs at least one trial");
    if (partition.m() != model.m()) throw InvalidArgument("partition width differs from the measurement dimension");
    validate_strategy(strategy);
  }
};

struct TrialResult {
  std::vector<double> user_sq_err;  ///< ||x_k - x^s_{k|k}||^2 as seen by the user, k = 1..T
  std::vector<double> eav_sq_err;   ///< ||x_k - x_{k|k}||^2, k = 1..T
  ScheduleTrace schedule;
  double max_user_sensor_gap = 0.0;  ///< max_k ||x^user_k - x^s_k||_inf
  double min_floor_margin = std::numeric_limits<double>::infinity();  ///< min_k lambda_min(P_k - P^s_k)
};

namespace detail {

inline ScheduleTrace trial_schedule(const ScenarioConfig& cfg, std::uint64_t trial_seed) {
  if (std::holds_alternative<Stochastic>(cfg.strategy)) {
    return generate(cfg.strategy, cfg.horizon, derive_seed(trial_seed, {2}));
  }
  return generate(cfg.strategy, cfg.horizon);
}

}  // namespace detail

/// One closed-loop run. `sensor` may carry precomputed covariances for at
/// least cfg.horizon steps.
inline TrialResult run_closed_loop(const ScenarioConfig& cfg, std::uint64_t trial_seed,
                                   const SensorCovariances* sensor = nullptr) {
  SensorCovariances own;
  if (sensor == nullptr || sensor->horizon() < cfg.horizon) {
    own = sensor_covariances(cfg.model, cfg.horizon);
    sensor = &own;
  }
  const SystemModel& M = cfg.model;
  TrialResult out;
  out.schedule = detail::trial_schedule(cfg, trial_seed);
  out.user_sq_err.resize(cfg.horizon);
  out.eav_sq_err.resize(cfg.horizon);

  Rng rng(derive_seed(trial_seed, {1}));
  const Matrix P0_factor = covariance_factor(M.P0);
  const Matrix Q_factor = covariance_factor(M.Q);
  const Matrix R_factor = covariance_factor(M.R);

  Vector x = M.x0_mean + P0_factor * standard_normal_vector(rng, M.n());
  Vector sensor_x = M.x0_mean;
  Vector user_x = M.x0_mean;
  EavesdropperState eav = initial_eavesdropper_state(M);

  for (std::size_t k = 1; k <= cfg.horizon; ++k) {
    x = M.A * x + M.B * (Q_factor * standard_normal_vector(rng, M.p()));
    const Vector z = M.C * x + R_factor * standard_normal_vector(rng, M.m());
    const Matrix& K = sensor->K[k];

    // Sensor: the gain sequence is measurement independent. It updates with
    // the innovation as the user will decode it, so decryption roundoff cannot
    // make the two copies drift apart through unstable modes.
    const Vector sensor_pred = M.A * sensor_x;
    const Vector eps = z - M.C * sensor_pred;
    const bool flag = out.schedule.at(k);
    const ChannelMessage msg = make_message(eps, flag, cfg.partition, cfg.key, k);
    sensor_x = sensor_pred + K * decrypt(msg, cfg.partition, cfg.key);

    // User: decrypts and repeats the sensor's update.
    user_x = M.A * user_x + K * decrypt(msg, cfg.partition, cfg.key);

    const EavesdropperView view = eavesdropper_view(msg, cfg.partition);
    eav = eav_step(eav, view.varsigma, view.y, sensor->P_pred[k], M, cfg.partition);

    out.user_sq_err[k - 1] = (x - user_x).squaredNorm();
    out.eav_sq_err[k - 1] = (x - eav.x).squaredNorm();
    out.max_user_sensor_gap = std::max(out.max_user_sensor_gap, (user_x - sensor_x).cwiseAbs().maxCoeff());
    out.min_floor_margin = std::min(out.min_floor_margin, min_eigenvalue(eav.P - sensor->P_filt[k]));
  }
  return out;
}

struct AggregateMSE {
  std::vector<double> user_mse;    ///< k = 1..T
  std::vector<double> eav_mse;     ///< k = 1..T
  std::vector<double> eav_theory;  ///< trace(E[P_{k|k}]) or trace(P_{k|k}), k = 1..T
  std::vector<std::size_t> floor_violations;  ///< k where eav_mse < user_mse by more than 3 standard errors
  std::size_t trials = 0;
  double max_user_sensor_gap = 0.0;
  double min_floor_margin = std::numeric_limits<double>::infinity();

  std::size_t horizon() const { return user_mse.size(); }
};

/// Theoretical eavesdropper trace for the configured strategy. Stochastic uses
/// the expectation over schedules; deterministic and single use the exact
/// recursion on their (fixed) schedule.
inline std::vector<double> theory_curve(const ScenarioConfig& cfg) {
  std::vector<Matrix> covs;
  if (const auto* s = std::get_if<Stochastic>(&cfg.strategy)) {
    if (s->varsigma > 0.0) {
      covs = expected_cov_stochastic(s->varsigma, cfg.partition, cfg.model, cfg.horizon).expected;
    } else {
      covs = sensor_covariances(cfg.model, cfg.horizon).P_filt;
    }
  } else {
    covs = cov_trajectory(generate(cfg.strategy, cfg.horizon), cfg.partition, cfg.model);
  }
  std::vector<double> out(cfg.horizon);
  for (std::size_t k = 1; k <= cfg.horizon; ++k) out[k - 1] = covs[k].trace();
  return out;
}

/// Worker count: COVERT_KALMAN_THREADS if set and positive, otherwise the
/// hardware concurrency.
inline unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("COVERT_KALMAN_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) hw = std::min<unsigned>(hw, static_cast<unsigned>(v));
  }
  return hw;
}

inline AggregateMSE monte_carlo(const ScenarioConfig& cfg) {
  cfg.validate();
  constexpr std::size_t kChunk = 64;
  const std::size_t T = cfg.horizon;
  const SensorCovariances sensor = sensor_covariances(cfg.model, T);
  const std::size_t chunks = (cfg.trials + kChunk - 1) / kChunk;

  struct Partial {
    std::vector<double> user, eav, diff, diff_sq;
    double gap = 0.0;
    double margin = std::numeric_limits<double>::infinity();
  };
  std::vector<Partial> partials(chunks);

  auto run_chunk = [&](std::size_t c) {
    Partial p;
    p.user.assign(T, 0.0);
    p.eav.assign(T, 0.0);
    p.diff.assign(T, 0.0);
    p.diff_sq.assign(T, 0.0);
    const std::size_t end = std::min(cfg.trials, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      const TrialResult r = run_closed_loop(cfg, cfg.seed + i, &sensor);
      for (std::size_t k = 0; k < T; ++k) {
        p.user[k] += r.user_sq_err[k];
        p.eav[k] += r.eav_sq_err[k];
        const double d = r.eav_sq_err[k] - r.user_sq_err[k];
        p.diff[k] += d;
        p.diff_sq[k] += d * d;
      }
      p.gap = std::max(p.gap, r.max_user_sensor_gap);
      p.margin = std::min(p.margin, r.min_floor_margin);
    }
    partials[c] = std::move(p);
  };

  const unsigned workers = std::min<std::size_t>(worker_count(), chunks);
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t c = w; c < chunks; c += workers) run_chunk(c);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  AggregateMSE agg;
  agg.trials = cfg.trials;
  agg.user_mse.assign(T, 0.0);
  agg.eav_mse.assign(T, 0.0);
  std::vector<double> diff(T, 0.0), diff_sq(T, 0.0);
  for (const Partial& p : partials) {
    for (std::size_t k = 0; k < T; ++k) {
      agg.user_mse[k] += p.user[k];
      agg.eav_mse[k] += p.eav[k];
      diff[k] += p.diff[k];
      diff_sq[k] += p.diff_sq[k];
    }
    agg.max_user_sensor_gap = std::max(agg.max_user_sensor_gap, p.gap);
    agg.min_floor_margin = std::min(agg.min_floor_margin, p.margin);
  }
  const double n = static_cast<double>(cfg.trials);
  for (std::size_t k = 0; k < T; ++k) {
    agg.user_mse[k] /= n;
    agg.eav_mse[k] /= n;
    const double mean = diff[k] / n;
    const double var = cfg.trials > 1 ? std::max(0.0, (diff_sq[k] - n * mean * mean) / (n - 1.0)) : 0.0;
    if (mean < -3.0 * std::sqrt(var / n)) agg.floor_violations.push_back(k + 1);
  }
  agg.eav_theory = theory_curve(cfg);
  return agg;
}

// ---------------------------------------------------------------------------
// Mass-spring benchmark: two masses (1 and 2) coupled by springs (20 and 1)
// with dampers c1, c2; positions measured.

inline SystemModel mass_spring_scenario(double c1, double c2) {
  constexpr double m1 = 1.0, m2 = 2.0, k1 = 20.0, k2 = 1.0, dt = 0.1;
  Matrix Ac(4, 4);
  Ac << 0, 0, 1, 0,
        0, 0, 0, 1,
        -k1 / m1, k1 / m1, -c1 / m1, c1 / m1,
        k1 / m2, -(k1 + k2) / m2, c1 / m2, -(c1 + c2) / m2;
  Matrix Bc = Matrix::Zero(4, 2);
  Bc(2, 0) = 1.0 / m1;
  Bc(3, 1) = 1.0 / m2;
  const DiscreteSystem d = zoh_discretize(Ac, Bc, dt);

  SystemModel model;
  model.A = d.A;
  model.B = d.B;
  model.C = Matrix::Zero(2, 4);
  model.C(0, 0) = 1.0;
  model.C(1, 1) = 1.0;
  model.Q = Matrix::Identity(2, 2);
  model.R = 0.25 * Matrix::Identity(2, 2);
  model.x0_mean = Vector::Zero(4);
  model.P0 = Matrix::Zero(4, 4);
  model.P0 = steady_state(model).P_plus;
  return model;
}

// ---------------------------------------------------------------------------
// Export.

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline nlohmann::json doubles_to_json(const std::vector<double>& v) {
  nlohmann::json out = nlohmann::json::array();
  for (double x : v) out.push_back(x);
  return out;
}

}  // namespace detail

enum class ExportFormat { Csv, Json };

inline ExportFormat parse_export_format(const std::string& s) {
  if (s == "csv") return ExportFormat::Csv;
  if (s == "json") return ExportFormat::Json;
  throw InvalidArgument("unknown export format '" + s + "' (expected csv or json)");
}

inline nlohmann::json results_to_json(const AggregateMSE& agg, const nlohmann::json& config_echo = nlohmann::json::object()) {
  nlohmann::json j;
  j["config_echo"] = config_echo;
  nlohmann::json ks = nlohmann::json::array();
  for (std::size_t k = 1; k <= agg.horizon(); ++k) ks.push_back(k);
  j["k"] = ks;
  j["user_mse"] = detail::doubles_to_json(agg.user_mse);
  j["eav_mse"] = detail::doubles_to_json(agg.eav_mse);
  j["eav_theory"] = detail::doubles_to_json(agg.eav_theory);
  return j;
}

inline std::string results_to_csv(const AggregateMSE& agg) {
  std::string out = "k,user_mse,eav_mse,eav_theory\n";
  for (std::size_t i = 0; i < agg.horizon(); ++i) {
    out += std::to_string(i + 1);
    out += ',';
    out += detail::format_double(agg.user_mse[i]);
    out += ',';
    out += detail::format_double(agg.eav_mse[i]);
    out += ',';
    out += detail::format_double(i < agg.eav_theory.size() ? agg.eav_theory[i] : std::nan(""));
    out += '\n';
  }
  return out;
}

inline void export_results(const AggregateMSE& agg, const std::string& path, ExportFormat format,
                           const nlohmann::json& config_echo = nlohmann::json::object()) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  if (format == ExportFormat::Csv) {
    f << results_to_csv(agg);
  } else {
    f << results_to_json(agg, config_echo).dump(2) << '\n';
  }
  if (!f) throw Error("failed writing '" + path + "'");
}

inline AggregateMSE results_from_json(const nlohmann::json& j) {
  AggregateMSE agg;
  try {
    agg.user_mse = j.at("user_mse").get<std::vector<double>>();
    agg.eav_mse = j.at("eav_mse").get<std::vector<double>>();
    agg.eav_theory = j.at("eav_theory").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed results JSON: ") + e.what());
  }
  if (agg.eav_mse.size() != agg.user_mse.size() || agg.eav_theory.size() != agg.user_mse.size()) {
    throw InvalidArgument("malformed results JSON: series lengths differ");
  }
  return agg;
}

inline AggregateMSE load_results_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("'" + path + "' is not valid JSON: " + e.what());
  }
  return results_from_json(j);
}

}  // namespace covert_kalman

#endif  // COVERT_KALMAN_HARNESS_HPP
