#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sdup/error.hpp"
#include "sdup/gf256.hpp"

namespace sdup {

using Bytes = std::vector<std::uint8_t>;

struct Share {
  FieldByte x;    // evaluation point, never zero
  Bytes payload;  // one polynomial evaluation per secret byte

  friend bool operator==(const Share&, const Share&) = default;
};

struct ShareSet {
  std::size_t k = 0;
  std::size_t n = 0;
  std::vector<Share> shares;
};

inline void check_threshold(std::size_t k, std::size_t n) {
  if (k == 0) throw Error(ErrorCode::parameter, "threshold k must be at least 1");
  if (n < k) throw Error(ErrorCode::parameter, "share count n must be >= k");
  if (n > 255) throw Error(ErrorCode::parameter, "share count n must be <= 255");
}

// Shamir (k, n) sharing, byte-parallel: every secret byte gets its own random
// polynomial of degree k-1 whose constant term is that byte. Share j is the
// evaluation at x = j. Coefficients are the low 8 bits of successive rng()
// calls, drawn byte by byte in order c_1..c_{k-1}.
template <class Rng>
ShareSet split(std::span<const std::uint8_t> secret, std::size_t k, std::size_t n, Rng& rng) {
  check_threshold(k, n);
  if (secret.empty()) throw Error(ErrorCode::parameter, "secret must not be empty");

  ShareSet set{k, n, {}};
  set.shares.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    set.shares[j].x = FieldByte(static_cast<std::uint8_t>(j + 1));
    set.shares[j].payload.resize(secret.size());
  }

  std::vector<FieldByte> coeffs(k);
  for (std::size_t i = 0; i < secret.size(); ++i) {
    coeffs[0] = FieldByte(secret[i]);
    for (std::size_t c = 1; c < k; ++c) coeffs[c] = FieldByte(static_cast<std::uint8_t>(rng() & 0xFFu));
    for (auto& share : set.shares) {
      // Horner
      FieldByte acc{};
      for (std::size_t c = k; c-- > 0;) acc = acc * share.x + coeffs[c];
      share.payload[i] = acc.value();
    }
  }
  return set;
}

// Lagrange interpolation at x = 0 over the first k shares. All provided shares
// are validated (distinct nonzero x, equal payload lengths).
inline Bytes reconstruct(std::span<const Share> shares, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::parameter, "threshold k must be at least 1");
  if (shares.size() < k) {
    throw Error(ErrorCode::insufficient_shares,
                "have " + std::to_string(shares.size()) + ", need " + std::to_string(k));
  }
  bool seen[256] = {};
  for (const auto& s : shares) {
    if (s.x.is_zero()) throw Error(ErrorCode::malformed, "share with x = 0");
    if (seen[s.x.value()]) throw Error(ErrorCode::duplicate_share, "x = " + std::to_string(s.x.value()));
    seen[s.x.value()] = true;
    if (s.payload.size() != shares.front().payload.size())
      throw Error(ErrorCode::malformed, "share payload lengths differ");
  }

  const auto used = shares.first(k);
  std::vector<FieldByte> basis(k);
  for (std::size_t j = 0; j < k; ++j) {
    FieldByte num(1), den(1);
    for (std::size_t m = 0; m < k; ++m) {
      if (m == j) continue;
      num = num * used[m].x;
      den = den * (used[m].x + used[j].x);
    }
    basis[j] = gf_div(num, den);
  }

  Bytes secret(used.front().payload.size());
  for (std::size_t i = 0; i < secret.size(); ++i) {
    FieldByte acc{};
    for (std::size_t j = 0; j < k; ++j) acc = acc + basis[j] * FieldByte(used[j].payload[i]);
    secret[i] = acc.value();
  }
  return secret;
}

}  // namespace sdup
