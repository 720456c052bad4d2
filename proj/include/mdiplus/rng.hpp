#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace mdiplus {

// Deterministic PRNG with independent streams.
//
// A 64-bit LCG state is passed through the splitmix64 output mix; the stream
// id selects the (odd) increment. The byte sequence depends only on
// (seed, stream) and the call sequence -- never on platform, locale, or
// thread count -- which is what makes fits and simulation runs reproducible
// bit-for-bit. std::random distributions are implementation-defined, so all
// draws are produced here.
class Rng {
 public:
  Rng() : Rng(0, 0) {}
  Rng(std::uint64_t seed, std::uint64_t stream);

  // Derives a child seed/stream for an independent logical stream, e.g. one
  // per (purpose, replicate) or (purpose, tree, feature).
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b = 0);

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random mantissa bits.
  double uniform01();

  // Unbiased uniform integer in [0, n); n must be positive.
  std::size_t uniform_below(std::size_t n);

  // Standard normal deviate (Box-Muller; the paired value is cached).
  double normal();

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct values from {0, ..., n-1}, returned in ascending order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                      std::size_t k);

 private:
  std::uint64_t state_;
  std::uint64_t inc_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// Stream purpose tags; mixed with indices via Rng::derive so that streams for
// different purposes never collide.
namespace stream {
constexpr std::uint64_t kBootstrap = 0x01;
constexpr std::uint64_t kGrow = 0x02;
constexpr std::uint64_t kPermute = 0x03;
constexpr std::uint64_t kSplit = 0x04;
constexpr std::uint64_t kReplicate = 0x05;
constexpr std::uint64_t kCovariates = 0x06;
constexpr std::uint64_t kSignal = 0x07;
constexpr std::uint64_t kNoise = 0x08;
constexpr std::uint64_t kCorrupt = 0x09;
constexpr std::uint64_t kOutlier = 0x0a;
constexpr std::uint64_t kForest = 0x0b;
constexpr std::uint64_t kStability = 0x0c;
constexpr std::uint64_t kMda = 0x0d;
}  // namespace stream

}  // namespace mdiplus
