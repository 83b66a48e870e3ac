#ifndef COVERT_KALMAN_SCHEDULE_HPP
#define COVERT_KALMAN_SCHEDULE_HPP

// Encryption decision traces varsigma_1..varsigma_T. Time is 1-based: at(1)
// is the first transmitted innovation.
//
// Stochastic traces draw one mt19937_64 output per step and set the bit when
// (draw >> 11) * 2^-53 < varsigma.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <type_traits>
#include <variant>
#include <vector>

#include "covert_kalman/errors.hpp"
#include "covert_kalman/random.hpp"

namespace covert_kalman {

struct Stochastic {
  double varsigma = 0.0;  ///< Pr(encrypt) per step
};

struct Deterministic {
  std::vector<std::uint8_t> f_bits;  ///< f(1..L), extended periodically
  std::size_t period() const { return f_bits.size(); }
  std::size_t ones() const {
    std::size_t c = 0;
    for (auto b : f_bits) c += b;
    return c;
  }
};

struct Single {
  std::size_t delta = 1;  ///< the one encrypted step
};

using Strategy = std::variant<Stochastic, Deterministic, Single>;

struct ScheduleTrace {
  std::vector<std::uint8_t> bits;  ///< bits[k-1] = varsigma_k
  std::optional<std::uint64_t> seed;

  std::size_t horizon() const { return bits.size(); }
  bool at(std::size_t k) const { return bits.at(k - 1) != 0; }
  std::size_t count() const {
    std::size_t c = 0;
    for (auto b : bits) c += b;
    return c;
  }
};

inline void validate_strategy(const Strategy& strategy) {
  if (const auto* s = std::get_if<Stochastic>(&strategy)) {
    if (!(s->varsigma >= 0.0 && s->varsigma <= 1.0)) throw InvalidArgument("stochastic varsigma must lie in [0, 1]");
  } else if (const auto* d = std::get_if<Deterministic>(&strategy)) {
    if (d->f_bits.empty()) throw InvalidArgument("deterministic decision function needs period L >= 1");
    for (auto b : d->f_bits) {
      if (b > 1) throw InvalidArgument("deterministic decision bits must be 0 or 1");
    }
  } else if (std::get<Single>(strategy).delta < 1) {
    throw InvalidArgument("single-strategy delta must be >= 1");
  }
}

inline ScheduleTrace gen_stochastic(double varsigma, std::size_t horizon, std::uint64_t seed) {
  validate_strategy(Stochastic{varsigma});
  ScheduleTrace trace;
  trace.seed = seed;
  trace.bits.resize(horizon);
  Rng rng(seed);
  for (auto& b : trace.bits) b = uniform01(rng) < varsigma ? 1 : 0;
  return trace;
}

inline ScheduleTrace gen_deterministic(const std::vector<std::uint8_t>& f_bits, std::size_t horizon) {
  validate_strategy(Deterministic{f_bits});
  ScheduleTrace trace;
  trace.bits.resize(horizon);
  for (std::size_t i = 0; i < horizon; ++i) trace.bits[i] = f_bits[i % f_bits.size()];
  return trace;
}

inline ScheduleTrace gen_single(std::size_t delta, std::size_t horizon) {
  validate_strategy(Single{delta});
  ScheduleTrace trace;
  trace.bits.assign(horizon, 0);
  if (delta <= horizon) trace.bits[delta - 1] = 1;
  return trace;
}

/// Dispatches on the strategy; `seed` only matters for the stochastic kind.
inline ScheduleTrace generate(const Strategy& strategy, std::size_t horizon, std::uint64_t seed = 0) {
  return std::visit(
      [&](const auto& s) -> ScheduleTrace {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Stochastic>) {
          return gen_stochastic(s.varsigma, horizon, seed);
        } else if constexpr (std::is_same_v<T, Deterministic>) {
          return gen_deterministic(s.f_bits, horizon);
        } else {
          return gen_single(s.delta, horizon);
        }
      },
      strategy);
}

}  // namespace covert_kalman

#endif  // COVERT_KALMAN_SCHEDULE_HPP
