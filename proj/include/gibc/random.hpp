// SPDX-License-Identifier: Apache-2.0

#ifndef GIBC_RANDOM_HPP
#define GIBC_RANDOM_HPP

#include <array>
#include <cmath>
#include <cstdint>

#include "gibc/core.hpp"

namespace gibc
{

//
// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A draw is a pure function
// of (key, counter), so the value attached to mode n never depends on how many other
// values were drawn before it, or on which thread drew them.
//
class Philox4x32
{
public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key)
  {
    for (int round = 0; round < 10; ++round)
    {
      ctr = single_round(ctr, key);
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }

private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static Counter single_round(const Counter &c, const Key &k)
  {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

// Independent streams distinguish what a draw is used for.
enum class Stream : std::uint32_t
{
  FgfGaussian = 1,
  KernelLaw = 2,
  Cantor = 3,
  TestVectors = 4,
  Generic = 5
};

//
// Keyed draws: (seed, stream, index, slot) -> value. `slot` selects among independent
// values attached to the same index.
//
class CounterRng
{
public:
  explicit CounterRng(std::uint64_t seed, Stream stream = Stream::Generic)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(static_cast<std::uint32_t>(stream))
  {
  }

  // Uniform in (0, 1), 53-bit resolution.
  double uniform(std::uint64_t index, std::uint32_t slot = 0) const
  {
    const auto r = Philox4x32::generate(
        {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), slot,
         stream_},
        key_);
    const std::uint64_t bits =
        ((static_cast<std::uint64_t>(r[0]) << 32) | r[1]) >> 11;  // 53 bits
    return (static_cast<double>(bits) + 0.5) * (1.0 / 9007199254740992.0);
  }

  std::uint32_t bits32(std::uint64_t index, std::uint32_t slot = 0) const
  {
    return Philox4x32::generate({static_cast<std::uint32_t>(index),
                                 static_cast<std::uint32_t>(index >> 32), slot, stream_},
                                key_)[0];
  }

  // Standard normal via Box-Muller on two keyed uniforms.
  double normal(std::uint64_t index, std::uint32_t slot = 0) const
  {
    const double u1 = uniform(index, 2 * slot);
    const double u2 = uniform(index, 2 * slot + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  double exponential(std::uint64_t index, double rate = 1.0, std::uint32_t slot = 0) const
  {
    return -std::log(uniform(index, slot)) / rate;
  }

private:
  Philox4x32::Key key_;
  std::uint32_t stream_;
};

}  // namespace gibc

#endif  // GIBC_RANDOM_HPP
