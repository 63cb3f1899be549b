#pragma once

#include <cmath>
#include <cstdint>

// Counter-based random number generation. Every draw is a pure function of a
// 64-bit key, and keys are derived hierarchically from (seed, part, part, ...),
// so results are identical no matter in which order the draws are evaluated.

namespace dsgd::rng {

inline constexpr std::uint64_t golden = 0x9e3779b97f4a7c15ull;

// splitmix64 finalizer (Stafford mix13)
constexpr std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t combine(std::uint64_t key, std::uint64_t part) {
  return mix(key + golden + part);
}

template <class... Parts>
constexpr std::uint64_t derive(std::uint64_t seed, Parts... parts) {
  std::uint64_t key = mix(seed + golden);
  ((key = combine(key, static_cast<std::uint64_t>(parts))), ...);
  return key;
}

// i-th word of the output stream attached to a key (splitmix64 sequence)
constexpr std::uint64_t word(std::uint64_t key, std::uint64_t i) {
  return mix(key + (i + 1) * golden);
}

inline double to_unit(std::uint64_t bits) {  // [0, 1)
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double to_unit_open(std::uint64_t bits) {  // (0, 1], safe for log
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

// maps a word to {0, ..., n-1}; multiply-shift, bias < n / 2^64
inline std::uint32_t below(std::uint64_t bits, std::uint32_t n) {
  return static_cast<std::uint32_t>(
      (static_cast<unsigned __int128>(bits) * n) >> 64);
}

// Sequential stream over a derived key, for code that consumes a variable
// number of draws (data generation, Monte Carlo loops).
class stream {
 public:
  explicit stream(std::uint64_t key) : state_(key) {}

  std::uint64_t next_u64() {
    state_ += golden;
    return mix(state_);
  }
  double next_unit() { return to_unit(next_u64()); }
  std::uint32_t next_below(std::uint32_t n) { return below(next_u64(), n); }

  double next_gaussian() {  // Box-Muller, two uniforms per pair
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = to_unit_open(next_u64());
    const double u2 = to_unit(next_u64());
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// key-derivation domains, so unrelated draws never share a key
enum domain : std::uint64_t {
  dom_step_sample = 1,   // per-round sampling of local data indices
  dom_task = 2,          // synthetic task generation
  dom_replication = 3,   // Monte Carlo replication keys
  dom_sweep_cell = 4,    // experiment sweep cells
  dom_resample = 5,      // perturbation resamples
};

}  // namespace dsgd::rng
