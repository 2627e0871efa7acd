#pragma once

#include <cstdint>
#include <random>

namespace rmbench {

// All randomness flows through this wrapper. std::mt19937_64 output is fully
// specified by the standard, and the helpers below avoid the
// implementation-defined std:: distributions, so draw sequences are stable
// across platforms and compilers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53 bits. Exactly one engine draw.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform index in [0, n). Exactly one engine draw (multiply-shift; the
  // bias is O(n / 2^64), irrelevant at our sample sizes).
  std::uint32_t next_index(std::uint32_t n) {
    return static_cast<std::uint32_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

 private:
  std::mt19937_64 engine_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Named-stream derivation: a master seed plus a role tag and up to two
// indices yield an independent stream seed. Streams are kept separate per
// role (training exploration, environment draws, noise draws, ...) so that
// e.g. enabling noise never perturbs the environment's draw sequence.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t role,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t s = splitmix64(master ^ 0x6a09e667f3bcc908ULL);
  s = splitmix64(s ^ role);
  s = splitmix64(s ^ a);
  s = splitmix64(s ^ b);
  return s;
}

}  // namespace rmbench
