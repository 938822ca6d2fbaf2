#pragma once

#include <cstdint>
#include <cstddef>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lamp {

#ifdef LAMP_REAL_FLOAT
using real = float;
#else
using real = double;
#endif

using Vec = std::vector<real>;

// Error taxonomy. Config/usage errors are programmer- or operator-facing and
// carry the offending key or call site; training errors name the layer that
// produced a non-finite value.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TaskError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// FNV-1a, 64-bit. Used for text hashing (bag-of-words buckets) and for
// config/dataset fingerprints. Stable across platforms by construction.
constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

constexpr std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : s) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

constexpr std::uint64_t fnv1a64_u64(std::uint64_t x, std::uint64_t h = kFnvOffset) {
  for (int i = 0; i < 8; ++i) {
    h ^= x & 0xff;
    h *= kFnvPrime;
    x >>= 8;
  }
  return h;
}

// splitmix64 step; also used as the seed mixer so derived streams decorrelate.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (0x9E3779B97F4A7C15ull + (b << 6) + (b >> 2)));
}

constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

// Deterministic RNG. std::mt19937 would be fine for the engine but the
// std distributions are implementation-defined, so the distributions are
// spelled out here and outputs are bit-stable everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  // [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // [0, n). Multiply-shift; bias is < 2^-64 * n, irrelevant at our ranges.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw UsageError("uniform_int: empty range");
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Box-Muller, no spare caching: every call consumes exactly two draws so
  // consumption stays predictable for replay.
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = uniform01();
    double u2 = uniform01();
    // Guard log(0); u1 == 0 occurs with probability 2^-53.
    double r = std::sqrt(-2.0 * std::log(u1 + 0x1.0p-100));
    double z = r * std::cos(2.0 * std::numbers::pi * u2);
    return mean + stddev * z;
  }

 private:
  std::uint64_t state_;
};

inline bool is_finite(real x) { return std::isfinite(static_cast<double>(x)); }

inline real clamp01(real x) { return x < real(0) ? real(0) : (x > real(1) ? real(1) : x); }

// Canonical hex rendering used for config_hash in artifacts.
std::string hex64(std::uint64_t v);

// Shortest round-trip decimal rendering (std::to_chars), locale-independent.
// All numeric text we emit (CSV, JSON, SVG) goes through this so reruns are
// byte-identical.
std::string format_real(double v);

}  // namespace lamp
