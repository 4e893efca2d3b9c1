#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace cellfree {

// SplitMix64 step; used to derive independent per-stream seeds from a master
// seed so that parallel and serial execution consume identical randomness.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::mt19937_64 substream(std::uint64_t master_seed,
                                 std::uint64_t stream_index) {
  std::uint64_t s = master_seed ^ (0x5851f42d4c957f2dULL * (stream_index + 1));
  std::uint64_t a = splitmix64(s), b = splitmix64(s);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

// Circularly symmetric complex normal CN(0, I_n).
inline Eigen::VectorXcd cnormal(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v(i) = std::complex<double>(g(rng), g(rng));
  return v;
}

}  // namespace cellfree
