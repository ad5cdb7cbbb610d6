#ifndef COMMUTE_RNG_HPP
#define COMMUTE_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace commute {

/// Reproducible random stream. The engine is the standard 64-bit Mersenne
/// Twister, whose output sequence is fixed by the C++ standard; the
/// variate transforms below are written out so results do not depend on a
/// standard library's distribution implementations.
class Rng {
public:
  static constexpr std::string_view kAlgorithm = "mt19937_64+u53+lemire";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Unbiased uniform integer on [0, bound), bound > 0 (Lemire's method).
  std::uint64_t bounded(std::uint64_t bound) {
    unsigned __int128 product = static_cast<unsigned __int128>(next()) * bound;
    auto low = static_cast<std::uint64_t>(product);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        product = static_cast<unsigned __int128>(next()) * bound;
        low = static_cast<std::uint64_t>(product);
      }
    }
    return static_cast<std::uint64_t>(product >> 64);
  }

private:
  std::mt19937_64 engine_;
};

} // namespace commute

#endif // COMMUTE_RNG_HPP
