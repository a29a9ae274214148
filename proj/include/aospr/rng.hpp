#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "aospr/errors.hpp"

namespace aospr {

// Seed mixing (splitmix64). Used to derive independent substreams from a
// base seed so environment and policy randomness never share a stream.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
  return splitmix64(splitmix64(base) ^ splitmix64(tag));
}

// mt19937_64 with hand-rolled double/int helpers. std::uniform_*
// distributions are implementation-defined; these are not, which keeps
// trajectories reproducible across standard libraries.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer in [lo, hi] inclusive, rejection-sampled.
  int uniform_int(int lo, int hi) {
    if (hi < lo) throw InternalInvariant("uniform_int: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi) - lo + 1;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return lo + static_cast<int>(x % span);
  }

  // k distinct values from {lo,...,hi}, ascending (partial Fisher-Yates).
  std::vector<int> sample_without_replacement(int lo, int hi, int k);

  // Index sampled proportionally to probs (must sum to ~1).
  int categorical(const std::vector<double>& probs);

 private:
  std::mt19937_64 gen_;
};

inline std::vector<int> RngStream::sample_without_replacement(int lo, int hi, int k) {
  const int count = hi - lo + 1;
  if (k > count) throw InternalInvariant("sample_without_replacement: k > population");
  std::vector<int> pool(count);
  for (int i = 0; i < count; ++i) pool[i] = lo + i;
  for (int i = 0; i < k; ++i) {
    const int j = uniform_int(i, count - 1);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

inline int RngStream::categorical(const std::vector<double>& probs) {
  const double u = uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  // Guard against accumulated rounding: return the last positive entry.
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return static_cast<int>(i);
  }
  throw InternalInvariant("categorical: all-zero probability vector");
}

}  // namespace aospr
