#pragma once

#include <array>
#include <cstdint>

namespace splitac {

/// Philox4x32-10 block function (Salmon, Moraes, Dror, Shaw; SC'11).
/// Stateless: the 128 output bits are a pure function of (counter, key).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit constexpr Philox4x32(Key key) noexcept : key_(key) {}

  [[nodiscard]] Counter operator()(Counter ctr) const noexcept;

  [[nodiscard]] const Key& key() const noexcept { return key_; }

 private:
  Key key_;
};

/// Maps 64 random bits to a double in (0, 1) on a grid of spacing 2^-52.
[[nodiscard]] constexpr double to_open_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

/// Two independent standard normals from one Philox block (Box-Muller).
[[nodiscard]] std::array<double, 2> normal_pair(const Philox4x32::Counter& block) noexcept;

}  // namespace splitac
