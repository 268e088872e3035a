#include "memsde/rng.hpp"

#include <cmath>

namespace memsde {

namespace {

constexpr std::uint32_t kWeylA = 0x9E3779B9u;
constexpr std::uint32_t kWeylB = 0xBB67AE85u;
constexpr std::uint32_t kMulA = 0xD2511F53u;
constexpr std::uint32_t kMulB = 0xCD9E8D57u;

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline void round_once(std::uint32_t c[4], const std::uint32_t k[2]) {
  std::uint32_t hi0, lo0, hi1, lo1;
  mul_hi_lo(kMulA, c[0], hi0, lo0);
  mul_hi_lo(kMulB, c[2], hi1, lo1);
  const std::uint32_t r0 = hi1 ^ c[1] ^ k[0];
  const std::uint32_t r1 = lo1;
  const std::uint32_t r2 = hi0 ^ c[3] ^ k[1];
  const std::uint32_t r3 = lo0;
  c[0] = r0;
  c[1] = r1;
  c[2] = r2;
  c[3] = r3;
}

}  // namespace

std::array<std::uint32_t, 4> Philox::block(std::uint64_t index) const {
  std::uint32_t c[4] = {static_cast<std::uint32_t>(index),
                        static_cast<std::uint32_t>(index >> 32), stream_[0], stream_[1]};
  std::uint32_t k[2] = {key_[0], key_[1]};
  for (int r = 0; r < 10; ++r) {
    round_once(c, k);
    k[0] += kWeylA;
    k[1] += kWeylB;
  }
  return {c[0], c[1], c[2], c[3]};
}

double Philox::uniform(std::uint64_t index, int half) const {
  const auto b = block(index);
  const std::uint64_t bits =
      (static_cast<std::uint64_t>(b[2 * half]) << 32) | b[2 * half + 1];
  // 53 significant bits, shifted into (0,1)
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double Philox::normal(std::uint64_t index, int lane) const {
  const double u1 = uniform(index, 0);
  const double u2 = uniform(index, 1);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 6.283185307179586476925286766559 * u2;
  return lane == 0 ? r * std::cos(a) : r * std::sin(a);
}

}  // namespace memsde
