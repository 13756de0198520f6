#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace lens {

// splitmix64, used for seed derivation and stateless hashing.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t mix64(uint64_t a, uint64_t b) { return mix64(mix64(a) ^ b); }

// Uniform double in [0, 1) from a 64-bit word.
inline double to_unit(uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Deterministic RNG with self-contained sampling; the standard library's
// distributions are implementation-defined, so bounded draws and shuffles
// are done by hand to keep runs reproducible.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next() { return gen_(); }

  double unit() { return to_unit(next()); }

  // Uniform integer in [0, n), rejection sampled.
  uint64_t below(uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v = next();
    while (v >= limit) v = next();
    return v % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct elements of pool, in draw order.
  template <typename T>
  std::vector<T> sample(std::vector<T> pool, size_t k) {
    if (k > pool.size())
      throw std::invalid_argument("Rng::sample: k exceeds pool size");
    std::vector<T> out;
    out.reserve(k);
    for (size_t i = 0; i < k; ++i) {
      size_t j = i + static_cast<size_t>(below(pool.size() - i));
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
    return out;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace lens
