#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace folim {

/// Binary fraction in [0,1) with finitely many bits.  words[0] holds bits
/// 1..64 (most significant first); trailing zero words are never stored, so
/// equal values have equal representations.
class Dyadic {
 public:
  Dyadic() = default;
  /// x / 2^64.
  static Dyadic from_u64(std::uint64_t x);
  /// Parses "0.b1b2b3..." (binary digits).
  static Dyadic from_binary(const std::string& s);
  /// Parses the hex form produced by hex().
  static Dyadic from_hex(const std::string& s);

  /// Bit i (1-based) after the binary point.
  bool bit(std::size_t i) const;
  void set_bit(std::size_t i, bool value);
  /// Position of the last nonzero bit, 0 for zero.
  std::size_t bit_length() const;
  bool is_zero() const { return words_.empty(); }

  /// (m * x) mod 1.
  Dyadic times_mod1(std::uint64_t m) const;
  /// floor(m * x).
  std::uint64_t floor_times(std::uint64_t m) const;

  double to_double() const;
  /// Hex digits after the point, no prefix; "0" for zero.
  std::string hex() const;
  const std::vector<std::uint64_t>& words() const { return words_; }

  friend bool operator==(const Dyadic&, const Dyadic&) = default;
  friend std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b);

 private:
  void trim();
  std::vector<std::uint64_t> words_;
};

/// (q + c * sqrt(2)) mod 1.  As sqrt(2) is irrational, the pair is canonical.
struct TorusCoord {
  Dyadic q;
  std::int64_t c = 0;

  TorusCoord plus_sqrt2() const { return {q, c + 1}; }
  friend bool operator==(const TorusCoord&, const TorusCoord&) = default;
  friend auto operator<=>(const TorusCoord&, const TorusCoord&) = default;
};

/// Round-robin de-interleave: coordinate r (1-based) takes bits r, r+d, ...
std::vector<Dyadic> zeta(int d, const Dyadic& x);
/// Exact inverse of zeta.
Dyadic zeta_inv(int d, const std::vector<Dyadic>& coords);

}  // namespace folim
