#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace driftlab {

// Deterministic, counter-style random streams.
//
// Every consumer of randomness (a stay in the generator, a tree in a
// forest, a bootstrap replicate) derives its own stream from a master
// seed plus a tag path, e.g. rng_for(seed, "events", stay_id). Streams
// are therefore independent of scheduling: a run is bit-identical
// whether work is executed serially or across a thread pool, and
// regardless of how much randomness a sibling consumed.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2)));
}

inline std::uint64_t seed_tag(std::uint64_t seed) { return seed; }

template <typename T, typename... Rest>
std::uint64_t seed_tag(std::uint64_t seed, T first, Rest... rest) {
  std::uint64_t t;
  if constexpr (std::is_convertible_v<T, std::string_view>) {
    t = fnv1a64(std::string_view(first));
  } else {
    t = static_cast<std::uint64_t>(first);
  }
  return seed_tag(mix_seed(seed, t), rest...);
}

// xoshiro256++ with hand-rolled distributions. The standard library's
// distribution objects are implementation-defined, which would tie test
// fixtures to one libstdc++ version; these are pinned everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) {
      s = splitmix64(s);
      word = s;
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe as a log() argument.
  double uniform01_open() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  // Unbiased integer in [0, n). Rejection sampling on the top of the range.
  std::uint64_t bounded(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

  // Inclusive integer range.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(bounded(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  // Box-Muller, cosine branch. Two uniforms per draw keeps the stream
  // position independent of any cached spare value.
  double normal() {
    const double u1 = uniform01_open();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793238 * u2);
  }

  double exponential(double mean) { return -mean * std::log(uniform01_open()); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(bounded(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4];
};

// Stream for a (seed, tag...) path.
template <typename... Tags>
Rng rng_for(std::uint64_t seed, Tags... tags) {
  return Rng(seed_tag(seed, tags...));
}

}  // namespace driftlab
