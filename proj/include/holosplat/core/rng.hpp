#pragma once

#include <array>
#include <cstdint>

namespace holosplat {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Output is a
// pure function of (key, counter), so draws can be generated in any order.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      ctr = single_round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static Counter single_round(const Counter& c, const Key& k) noexcept {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

inline constexpr std::uint32_t scene_scope = 0xFFFFFFFFu;

// Logical coordinates of one random stream: the seed keys the generator, the
// remaining fields select a counter range. Nothing here depends on call order.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint32_t scope = 0;  // primitive id, or scene_scope
  std::uint32_t frame = 0;
  std::uint32_t stream = 0;  // distinguishes independent uses (mode, channel)
};

// Uniform double in [0, 1) for element `index` of the stream.
inline double uniform_at(const StreamKey& key, std::uint32_t index) noexcept {
  const Philox4x32::Key k{static_cast<std::uint32_t>(key.seed), static_cast<std::uint32_t>(key.seed >> 32)};
  const Philox4x32::Counter c{index, key.frame, key.scope, key.stream};
  const auto r = Philox4x32::generate(c, k);
  const std::uint64_t bits = (static_cast<std::uint64_t>(r[0]) << 21) ^ (static_cast<std::uint64_t>(r[1]) >> 11);
  return static_cast<double>(bits & ((1ull << 53) - 1)) * 0x1.0p-53;
}

}  // namespace holosplat
