#pragma once

#include <cstdint>
#include <random>

namespace arlab {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stream-split rule: the seed of a derived stream is the splitmix64 chain over
// (master seed, tag, a, b). Worker/sample/step indices go into a and b, so the
// stream for a given (tag, a, b) does not depend on thread count.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t a = 0,
                                    std::uint64_t b = 0) {
  return mix64(mix64(mix64(mix64(master) ^ tag) ^ a) ^ b);
}

inline Rng make_stream(std::uint64_t master, std::uint64_t tag, std::uint64_t a = 0,
                       std::uint64_t b = 0) {
  return Rng{stream_seed(master, tag, a, b)};
}

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::int64_t uniform_index(Rng& rng, std::int64_t n) {
  return std::uniform_int_distribution<std::int64_t>{0, n - 1}(rng);
}

inline double standard_normal(Rng& rng) { return std::normal_distribution<double>{0.0, 1.0}(rng); }

// Stream tags. Distinct constants keep derived streams disjoint.
namespace tags {
inline constexpr std::uint64_t teacher = 0x7465616368ULL;
inline constexpr std::uint64_t train_context = 0x74726378ULL;
inline constexpr std::uint64_t rollout = 0x726f6c6cULL;
inline constexpr std::uint64_t test_context = 0x74657374ULL;
inline constexpr std::uint64_t labels = 0x6c61626cULL;
inline constexpr std::uint64_t iterate = 0x69746572ULL;
}  // namespace tags

}  // namespace arlab
