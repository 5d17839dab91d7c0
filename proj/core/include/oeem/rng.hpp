#ifndef OEEM_RNG_HPP_
#define OEEM_RNG_HPP_

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace oeem {

// Counter-based generator: the i-th output (i = 0, 1, ...) for a seed is
//
//   splitmix64_finalize(seed + (i + 1) * 0x9E3779B97F4A7C15)
//
// which is exactly the SplitMix64 sequence started from `seed`. Because the
// output depends only on (seed, position), any stream can be replayed from
// its position, and split() derives independent child seeds by hashing.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0, std::uint64_t position = 0)
      : seed_(seed), position_(position) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t position() const { return position_; }

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Standard normal via Box-Muller (one draw per call, two uniforms consumed).
  double normal();
  // Uniform integer on [0, n). n must be > 0.
  std::size_t below(std::size_t n);
  bool bernoulli(double p) { return uniform() < p; }

  Rng split(std::uint64_t stream) const;
  Rng split(std::string_view stream) const;

  // Fisher-Yates shuffle of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::uint64_t seed_;
  std::uint64_t position_;
};

std::uint64_t splitmix64_finalize(std::uint64_t z);

// FNV-1a, used to turn stage names into stream ids.
std::uint64_t fnv1a64(std::string_view s);

}  // namespace oeem

#endif  // OEEM_RNG_HPP_
