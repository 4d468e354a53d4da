#pragma once

#include <array>
#include <cstdint>

#include "sdup/error.hpp"

namespace sdup {

// Element of GF(2^8) under the reduction polynomial x^8+x^4+x^3+x+1 (0x11B).
class FieldByte {
 public:
  constexpr FieldByte() noexcept = default;
  constexpr explicit FieldByte(std::uint8_t value) noexcept : value_(value) {}

  constexpr std::uint8_t value() const noexcept { return value_; }
  constexpr bool is_zero() const noexcept { return value_ == 0; }

  friend constexpr bool operator==(FieldByte, FieldByte) noexcept = default;

 private:
  std::uint8_t value_ = 0;
};

namespace detail {

struct GfTables {
  std::array<std::uint8_t, 512> exp{};  // doubled so exp[log a + log b] needs no modulo
  std::array<std::uint8_t, 256> log{};
};

constexpr GfTables make_gf_tables() {
  GfTables t;
  std::uint8_t x = 1;
  for (int i = 0; i < 255; ++i) {
    t.exp[i] = x;
    t.log[x] = static_cast<std::uint8_t>(i);
    // multiply by the generator 0x03 = x + 1
    std::uint8_t doubled = static_cast<std::uint8_t>(x << 1);
    if (x & 0x80) doubled ^= 0x1B;
    x = static_cast<std::uint8_t>(doubled ^ x);
  }
  for (int i = 255; i < 512; ++i) t.exp[i] = t.exp[i - 255];
  return t;
}

inline constexpr GfTables kGf = make_gf_tables();

}  // namespace detail

constexpr FieldByte gf_add(FieldByte a, FieldByte b) noexcept {
  return FieldByte(static_cast<std::uint8_t>(a.value() ^ b.value()));
}

constexpr FieldByte gf_mul(FieldByte a, FieldByte b) noexcept {
  if (a.is_zero() || b.is_zero()) return FieldByte{};
  return FieldByte(detail::kGf.exp[detail::kGf.log[a.value()] + detail::kGf.log[b.value()]]);
}

inline FieldByte gf_inv(FieldByte a) {
  if (a.is_zero()) throw Error(ErrorCode::division_by_zero, "0 has no inverse in GF(256)");
  return FieldByte(detail::kGf.exp[255 - detail::kGf.log[a.value()]]);
}

inline FieldByte gf_div(FieldByte a, FieldByte b) { return gf_mul(a, gf_inv(b)); }

constexpr FieldByte operator+(FieldByte a, FieldByte b) noexcept { return gf_add(a, b); }
constexpr FieldByte operator*(FieldByte a, FieldByte b) noexcept { return gf_mul(a, b); }

}  // namespace sdup
