#pragma once

#include <cstdint>
#include <cmath>
#include <random>

namespace trajpred {

// splitmix64 finalizer; used to derive independent stream seeds
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Seeded generator with hand-rolled distributions so that draws are
// reproducible across platforms (std:: distributions are not pinned by the
// standard, the raw mt19937_64 sequence is).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(mix64(seed)) {}

  std::uint64_t bits() { return gen_(); }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(bits() >> 11) * 0x1.0p-53;
  }

  // uniform in (0, 1]
  double uniform_pos() {
    return static_cast<double>((bits() >> 11) + 1) * 0x1.0p-53;
  }

  // standard normal, Box-Muller (one value per call, no cached spare)
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // unbiased uniform integer in [0, n), n >= 1
  std::size_t index(std::size_t n) {
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t bound = un == 0 ? 0 : (~std::uint64_t{0} - (~std::uint64_t{0} % un + 1) % un);
    std::uint64_t r = bits();
    while (r > bound) r = bits();
    return static_cast<std::size_t>(r % un);
  }

  // independent stream keyed by (base seed, stream id); does not consume state
  Rng derive(std::uint64_t stream) const {
    return Rng(mix64(seed_ ^ mix64(stream + 0x632be59bd9b4e019ull)));
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace trajpred
