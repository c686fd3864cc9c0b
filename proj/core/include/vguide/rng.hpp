#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace vguide {

/// Deterministic random source used everywhere randomness is needed.
///
/// The engine is std::mt19937_64, whose output sequence is fully pinned by
/// the standard, so runs reproduce bit-for-bit across platforms. Floating
/// point draws go through our own converters instead of the standard
/// distribution objects (those are implementation-defined).
///
/// Independent streams are derived with derive(): a SplitMix64 hash of the
/// base seed and a path of indices (e.g. {user_index, repetition}). Sweep
/// cells seeded this way are decorrelated and insensitive to execution
/// order, which keeps parallel sweeps deterministic.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1) with 53 random mantissa bits.
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller (platform-stable, unlike
  /// std::normal_distribution).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform01();  // (0, 1]
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// SplitMix64 step.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Derives a child seed from a base seed and a path of stream indices.
  static std::uint64_t derive(std::uint64_t base,
                              std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = mix(base);
    for (std::uint64_t p : path) s = mix(s ^ mix(p + 0x632be59bd9b4e019ULL));
    return s;
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace vguide
