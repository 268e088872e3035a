#ifndef MEMSDE_RNG_HPP
#define MEMSDE_RNG_HPP

#include <array>
#include <cstdint>
#include <cstddef>

namespace memsde {

/// Philox4x32-10 counter-based generator (Salmon et al., SC 2011).
///
/// Output block i of stream (seed, stream_id) is a pure function of
/// (seed, stream_id, i): no state to carry, any block addressable in O(1),
/// distinct stream_ids give statistically independent streams.  Key is the
/// 64-bit seed; counter words 2..3 hold the stream id, words 0..1 the block
/// index.
class Philox {
public:
  Philox(std::uint64_t seed, std::uint64_t stream_id)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_{static_cast<std::uint32_t>(stream_id),
                static_cast<std::uint32_t>(stream_id >> 32)} {}

  std::array<std::uint32_t, 4> block(std::uint64_t index) const;

  // 53-bit uniform in (0,1) from two lanes of a block (never exactly 0 or 1).
  double uniform(std::uint64_t index, int half) const;

  // Standard normal: Box-Muller on the two uniforms of block index; lane 0/1.
  double normal(std::uint64_t index, int lane) const;

  // i-th standard normal of the stream (block i/2, lane i%2).
  double normal_at(std::uint64_t i) const { return normal(i / 2, static_cast<int>(i % 2)); }

private:
  std::uint32_t key_[2];
  std::uint32_t stream_[2];
};

}  // namespace memsde

#endif
