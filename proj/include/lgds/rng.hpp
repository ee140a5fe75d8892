#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <string>

namespace lgds {

// splitmix64 step; also used to absorb words when deriving stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Derives one seed from several words (master seed, grid index, rep index,
// stream tag, ...). Order-sensitive, so distinct roles get distinct streams.
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> words) noexcept {
  std::uint64_t state = 0x6A09E667F3BCC908ULL;  // arbitrary nonzero start
  for (std::uint64_t w : words) {
    state ^= splitmix64(state) + w;
    (void)splitmix64(state);
  }
  return splitmix64(state);
}

// FNV-1a; stable fingerprint for policy labels so that adding or reordering
// algorithms in a config never perturbs another algorithm's draws.
inline std::uint64_t fnv1a(const std::string& s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Gaussian/uniform source on top of mt19937_64. The normal draws use
// Box-Muller on explicitly constructed 53-bit uniforms instead of
// std::normal_distribution, whose output is implementation-defined; this way
// fixed seeds reproduce bit-identical streams across standard libraries.
class GaussianRng {
 public:
  explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]; keeps log() finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Uniform over {0, ..., n-1}, unbiased via rejection.
  int uniform_int(int n) {
    const std::uint64_t span = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % span;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return static_cast<int>(x % span);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace lgds
