#pragma once

#include <cmath>
#include <cstdint>

namespace icept {

// Counter-based splitmix64 generator. All randomness in the simulator flows
// through this class so that traces are reproducible from a single seed,
// independent of platform or standard-library distribution internals.
//
// Stream derivation: stream(seed, k) hashes (seed, k) into an independent
// state, so per-request streams do not depend on draw order elsewhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
    std::uint64_t s = mix(seed + 0x9e3779b97f4a7c15ULL);
    s = mix(s ^ mix(stream_id + 0xbf58476d1ce4e5b9ULL));
    return Rng(s);
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe as a log() argument.
  double next_double_open() { return 1.0 - next_double(); }

  double exponential(double rate) { return -std::log(next_double_open()) / rate; }

  // Box-Muller, two uniforms per draw (no cached spare, keeps state minimal).
  double normal() {
    const double u1 = next_double_open();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Lognormal moment-matched to (mean, variance). Zero variance degenerates
  // to the constant `mean`; draws still consume RNG state so sequences stay
  // aligned when a class's variance is zeroed out.
  double lognormal_mean_var(double mean, double var) {
    const double z = normal();
    if (var <= 0.0) return mean;
    const double sigma2 = std::log1p(var / (mean * mean));
    const double mu = std::log(mean) - 0.5 * sigma2;
    return std::exp(mu + std::sqrt(sigma2) * z);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace icept
