#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace xgen {

/// xoshiro256** seeded through splitmix64.
///
/// This is the only randomness source in the library. Every stochastic
/// routine takes an Rng by reference, so a (seed, call sequence) pair fully
/// determines every draw on every platform. Normals use the Box-Muller
/// transform and cache the second value of each pair.
class Rng {
 public:
  struct State {
    std::array<std::uint64_t, 4> s{};
    bool has_spare = false;
    double spare = 0.0;
    bool operator==(const State&) const = default;
  };

  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform integer in [0, n). n must be positive.
  std::size_t uniform_int(std::size_t n);
  /// Standard normal.
  double normal();

  /// Derives an independent stream; advances this generator by one draw.
  Rng split();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_int(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  State state() const { return state_; }
  void set_state(const State& st) { state_ = st; }

 private:
  State state_;
};

/// splitmix64 finalizer; also used for hashing seeds together.
std::uint64_t splitmix64(std::uint64_t& x);

}  // namespace xgen
