#pragma once

#include <array>
#include <cmath>
#include <cstdint>


namespace levikin {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Stateless:
/// the output is a pure function of (counter, key), so any substream can be
/// addressed directly without sequential skipping.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Key key_from_seed(std::uint64_t seed) noexcept {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  }

  static constexpr Counter generate(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Uniform double strictly inside (0, 1) from 52 random bits. The largest
/// value, 1 - 2^-53, is exactly representable; with 53 bits it would round
/// up to 1.
inline double uniform_open(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 12;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

/// Standard normal quantile (Wichura, AS241 PPND16), relative accuracy
/// about 1e-16. Branch-light and several times faster than Box-Muller here.
double normal_quantile(double p) noexcept;

/// Two independent standard normals from one Philox block.
inline std::array<double, 2> normal_pair(const Philox4x32::Counter& block) noexcept {
  return {normal_quantile(uniform_open(block[0], block[1])),
          normal_quantile(uniform_open(block[2], block[3]))};
}

/// Normal-variate stream addressed by (seed, trajectory, axis, step).
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint32_t trajectory, std::uint32_t axis) noexcept
      : key_(Philox4x32::key_from_seed(seed)), trajectory_(trajectory), axis_(axis) {}

  std::array<double, 2> at(std::uint64_t step) const noexcept {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(step),
                                  static_cast<std::uint32_t>(step >> 32), trajectory_, axis_};
    return normal_pair(Philox4x32::generate(ctr, key_));
  }

 private:
  Philox4x32::Key key_;
  std::uint32_t trajectory_;
  std::uint32_t axis_;
};

/// Sequential normals from a NormalStream, two per Philox block.
class NormalSequence {
 public:
  explicit NormalSequence(const NormalStream& stream, std::uint64_t first_block = 0) noexcept
      : stream_(stream), block_(first_block) {}

  double next() noexcept {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const auto pair = stream_.at(block_++);
    spare_ = pair[1];
    have_spare_ = true;
    return pair[0];
  }

 private:
  NormalStream stream_;
  std::uint64_t block_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// SplitMix64 finalizer, used to derive independent seeds for sub-runs.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace levikin
