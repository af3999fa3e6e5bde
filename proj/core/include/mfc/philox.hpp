#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace mfc {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A pure
/// function of (counter, key): any stream position can be evaluated
/// directly, which makes per-particle, per-stage draws independent of
/// scheduling.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter apply(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85;
};

/// Random draws addressed by (seed, particle, stage, purpose).
class StreamAddress {
 public:
  enum Purpose : std::uint32_t { kDynamics = 0, kInitial = 1 };

  StreamAddress(std::uint64_t seed, std::uint64_t particle, std::uint32_t stage, Purpose purpose)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        ctr_{static_cast<std::uint32_t>(particle), static_cast<std::uint32_t>(particle >> 32), stage,
             purpose} {}

  /// Block `block` of this stream: 128 fresh bits.
  Philox4x32::Counter bits(std::uint32_t block = 0) const {
    auto c = ctr_;
    c[3] += block << 8;
    return Philox4x32::apply(c, key_);
  }

  /// Uniform on [0, 1) with 53 random bits, from words (2i, 2i+1) of a block.
  static double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t v = (std::uint64_t{hi} << 32 | lo) >> 11;
    return static_cast<double>(v) * 0x1.0p-53;
  }

  double uniform(std::uint32_t block = 0) const {
    const auto w = bits(block);
    return to_unit(w[0], w[1]);
  }

  /// Two independent standard normals (Box-Muller) from one block.
  std::array<double, 2> normal_pair(std::uint32_t block = 0) const {
    const auto w = bits(block);
    const double u1 = 1.0 - to_unit(w[0], w[1]);  // (0, 1]
    const double u2 = to_unit(w[2], w[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(t), r * std::sin(t)};
  }

 private:
  Philox4x32::Key key_;
  Philox4x32::Counter ctr_;
};

}  // namespace mfc
