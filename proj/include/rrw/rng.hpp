#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace rrw {

// SplitMix64-based generator. Used everywhere instead of <random> engines so that
// streams are reproducible across standard libraries and platforms, and so that
// per-(subject|repetition) substreams can be derived from a master seed without
// coupling results to thread schedule.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in (0,1), never exactly zero (safe for log()).
  double uniform_open() {
    double u;
    do {
      u = uniform01();
    } while (u <= 0.0);
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t x, r;
    do {
      x = next();
      r = x % n;
    } while (x - r > static_cast<std::uint64_t>(-1) - (n - 1));
    return r;
  }

  // Box-Muller; the spare is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform_open();
    double u2 = uniform01();
    double mag = std::sqrt(-2.0 * std::log(u1));
    double two_pi_u2 = 6.283185307179586476925286766559 * u2;
    spare_ = mag * std::sin(two_pi_u2);
    has_spare_ = true;
    return mag * std::cos(two_pi_u2);
  }

  double exponential(double rate) { return -std::log(uniform_open()) / rate; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

inline std::uint64_t mix_seed(std::uint64_t h, std::uint64_t tag) {
  h ^= tag * 0xD1B54A32D192ED03ULL + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  h = (h ^ (h >> 30)) * 0xBF58476D1CE4E5B9ULL;
  h = (h ^ (h >> 27)) * 0x94D049BB133111EBULL;
  return h ^ (h >> 31);
}

// Derives an independent substream seed from a master seed and a tag path,
// e.g. derive_seed(master, {kSubjectStream, subject_index}).
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix_seed(0x243F6A8885A308D3ULL, master);
  for (std::uint64_t tag : path) h = mix_seed(h, tag);
  return h;
}

}  // namespace rrw
