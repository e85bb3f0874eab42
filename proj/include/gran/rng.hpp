#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace gran {

// Deterministic RNG used everywhere randomness is needed. Hand-rolled so
// that streams are reproducible across standard libraries and platforms;
// std::normal_distribution makes no such promise.
//
// All randomness in a run flows from one root seed, expanded per stage via
// derive(): rng for stage "attack/fgsm" = Rng(derive(root, "attack/fgsm")).
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed ^ 0x9e3779b97f4a7c15ull) {
    // warm up so that small seeds do not produce correlated first draws
    next_u64();
    next_u64();
  }

  uint64_t next_u64() {
    // splitmix64
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller; draws are consumed in pairs internally
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // integer in [0, n)
  uint64_t index(uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    // Fisher-Yates
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// FNV-1a over arbitrary bytes; used for config fingerprints and artifact
// checksums (binding, not cryptographic).
inline uint64_t fnv1a64(const void* bytes, size_t len, uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x00000100000001b3ull;
  }
  return h;
}

inline uint64_t fnv1a64(const std::string& s, uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a64(s.data(), s.size(), h);
}

// Derive a stage seed from the root seed and a stage tag.
inline uint64_t derive_seed(uint64_t root, const std::string& tag) {
  return fnv1a64(tag, root ^ 0xcbf29ce484222325ull);
}

}  // namespace gran
