#pragma once

// Counter-based deterministic RNG.  Each (seed, stream) pair names an
// independent sequence; the i-th output is a pure function of (seed, stream,
// i), so sequences can be replayed or partitioned without shared state.
// Generator: splitmix64 finalizer over key + i * golden_gamma.
// Normal variates: Box-Muller on the uniform stream.

#include <cstdint>
#include <cmath>
#include <numbers>

namespace hypflow {

inline constexpr std::uint64_t kRngGamma = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix64(std::uint64_t x) {
  x += kRngGamma;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Stream ids used by the library.  Fixed so that runs are reproducible and
// documented; user code may use any other values.
enum class RngStream : std::uint64_t {
  dataset = 1,
  param_init = 2,
  split = 3,
  batching = 4,
  base_sampling = 5,
  eval_kl = 6,
  eval_importance = 7,
  generic = 100,
};

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix64(seed ^ mix64(stream ^ 0xA076'1D64'78BD'642Full))) {}
  CounterRng(std::uint64_t seed, RngStream stream)
      : CounterRng(seed, static_cast<std::uint64_t>(stream)) {}

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kRngGamma); }

  // Uniform in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe as a log() argument.
  double uniform_pos() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; generates pairs, caches the second.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform_pos();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(angle);
    have_spare_ = true;
    return r * std::cos(angle);
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hypflow
