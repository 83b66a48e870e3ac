#ifndef COVERT_KALMAN_REPORT_HPP
#define COVERT_KALMAN_REPORT_HPP

// JSON views of analysis and design results. Matrices are written row-major
// as nested arrays.

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "covert_kalman/design.hpp"
#include "covert_kalman/model.hpp"

namespace covert_kalman {

inline nlohmann::json matrix_to_json(const Matrix& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json complex_to_json(std::complex<double> z) { return {{"re", z.real()}, {"im", z.imag()}}; }

inline nlohmann::json to_json(const OptimalParams& p) {
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& c : p.candidates) cands.push_back({{"m_bar", c.m_bar}, {"frequency", c.frequency}, {"objective", c.objective}});
  nlohmann::json eig = nlohmann::json::array();
  for (Eigen::Index i = 0; i < p.generalized_eigenvalues.size(); ++i) eig.push_back(p.generalized_eigenvalues(i));
  return {{"m_bar", p.m_bar},
          {"frequency", p.frequency},
          {"S", matrix_to_json(p.S_opt)},
          {"S_bar", matrix_to_json(p.partition().S_bar())},
          {"objective", p.objective},
          {"W", matrix_to_json(p.W)},
          {"generalized_eigenvalues", eig},
          {"candidates", cands}};
}

inline nlohmann::json to_json(const DeterministicDesign& d) {
  nlohmann::json j = to_json(d.params);
  j["L"] = d.period;
  j["ones"] = d.ones;
  j["f"] = d.f_bits;
  return j;
}

inline nlohmann::json to_json(const UnstableDesign& d) {
  nlohmann::json w = nlohmann::json::array();
  for (Eigen::Index i = 0; i < d.w.size(); ++i) w.push_back(complex_to_json(d.w(i)));
  return {{"lambda", complex_to_json(d.lambda)},
          {"w", w},
          {"v", matrix_to_json(d.v.transpose())},
          {"used_imaginary_part", d.used_imaginary},
          {"S_bar", matrix_to_json(d.S_bar)},
          {"S", matrix_to_json(d.S)}};
}

inline nlohmann::json to_json(const BoundednessVerdict& v) {
  return {{"verdict", to_string(v.verdict)},
          {"witness_trace", v.witness_trace},
          {"baseline_trace", v.baseline_trace},
          {"iterations", v.iterations},
          {"witness", matrix_to_json(v.witness)}};
}

inline nlohmann::json to_json(const SingleStrategyVerdict& v) {
  nlohmann::json modes = nlohmann::json::array();
  for (auto z : v.failing_modes) modes.push_back(complex_to_json(z));
  return {{"case", to_string(v.spectral_case)}, {"unbounded", to_string(v.unbounded)}, {"rho", v.rho},
          {"failing_modes", modes}};
}

/// Summary printed by `analyze`.
struct AnalysisReport {
  std::optional<BoundednessVerdict> verdict;
  std::vector<std::pair<std::string, Matrix>> limits;  ///< named limit matrices
  std::optional<OptimalParams> optimal;
  std::optional<SingleStrategyVerdict> single;
  std::size_t delta = 1;
  std::size_t N = 0;
  double rho = 0.0;
};

inline nlohmann::json to_json(const AnalysisReport& r) {
  nlohmann::json j;
  j["verdict"] = r.verdict ? nlohmann::json(to_json(*r.verdict)) : nlohmann::json(nullptr);
  nlohmann::json limits = nlohmann::json::object();
  for (const auto& [name, M] : r.limits) limits[name] = {{"trace", M.trace()}, {"matrix", matrix_to_json(M)}};
  j["limits"] = limits;
  if (r.optimal) {
    j["optimal"] = {{"m_bar", r.optimal->m_bar}, {"frequency", r.optimal->frequency}, {"S", matrix_to_json(r.optimal->S_opt)},
                    {"objective", r.optimal->objective}};
  } else {
    j["optimal"] = nullptr;
  }
  if (r.single) {
    j["single_strategy"] = to_json(*r.single);
    j["single_strategy"]["delta"] = r.delta;
  }
  j["N"] = r.N;
  j["rho"] = r.rho;
  return j;
}

}  // namespace covert_kalman

#endif  // COVERT_KALMAN_REPORT_HPP
