#pragma once

#include <cstdint>
#include <span>

namespace offpac {

// splitmix64 finalizer: fixed constants, bit-identical on every platform.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Counter-based generator (splitmix64). One instance per stream; streams with
// different derived seeds never share state, so draws on one stream cannot
// perturb another.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  // uniform in [0, 1), 53 random bits
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // uniform integer in [0, n), n > 0 (Lemire multiply-shift, no rejection)
  int uniform_int(int n) {
    return static_cast<int>(
        (static_cast<unsigned __int128>(next()) * static_cast<std::uint64_t>(n)) >> 64);
  }

 private:
  std::uint64_t state_;
};

// Pure stream derivation: (base seed, stream id, substream) -> generator seed.
// Streams are decorrelated by mixing; the mapping has no hidden state.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                 std::uint64_t substream = 0) {
  return mix64(mix64(base ^ (stream * 0x9e3779b97f4a7c15ull)) ^
               (substream * 0xd1b54a32d192ed03ull));
}

// Inverse-CDF draw from a discrete distribution; probs need not sum to exactly
// one, the last index absorbs the residual.
inline int sample_discrete(std::span<const double> probs, double u01) {
  double cum = 0.0;
  for (std::size_t a = 0; a + 1 < probs.size(); ++a) {
    cum += probs[a];
    if (u01 < cum) return static_cast<int>(a);
  }
  return static_cast<int>(probs.size()) - 1;
}

// FNV-1a over bytes; used for config-cell keys and weight-purity hashes.
inline std::uint64_t fnv1a64(const void* data, std::size_t len) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace offpac
