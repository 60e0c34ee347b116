#include <random>

#include "doctest.h"
#include "folim/dyadic.hpp"

using namespace folim;

namespace {

// Coordinate r of zeta(d, x / 2^64) as a list of bits, straight from the
// bit positions of x.
std::vector<bool> deinterleave_bits(std::uint64_t x, int d, int r) {
  std::vector<bool> out;
  for (int pos = r; pos <= 64; pos += d) out.push_back((x >> (64 - pos)) & 1u);
  return out;
}

}  // namespace

TEST_CASE("binary parsing and canonical form") {
  auto a = Dyadic::from_binary("0.1100");
  auto b = Dyadic::from_binary("0.11");
  CHECK(a == b);
  CHECK(a.bit_length() == 2);
  CHECK(a.to_double() == 0.75);
  CHECK(Dyadic::from_binary("0.0").is_zero());
  CHECK_THROWS(Dyadic::from_binary("1.1"));
  CHECK_THROWS(Dyadic::from_binary("0.12"));
}

TEST_CASE("hex round trip") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 200; ++t) {
    Dyadic x = Dyadic::from_u64(rng());
    x.set_bit(64 + 1 + rng() % 100, true);
    CHECK(Dyadic::from_hex(x.hex()) == x);
  }
  CHECK(Dyadic().hex() == "0");
}

TEST_CASE("zeta of 3/4 in two coordinates") {
  auto parts = zeta(2, Dyadic::from_binary("0.1100"));
  REQUIRE(parts.size() == 2);
  CHECK(parts[0] == Dyadic::from_binary("0.1"));
  CHECK(parts[1] == Dyadic::from_binary("0.1"));
}

TEST_CASE("zeta matches bit positions and inverts") {
  std::mt19937_64 rng(11);
  for (int d = 1; d <= 6; ++d) {
    for (int t = 0; t < 300; ++t) {
      const std::uint64_t x = rng();
      const auto parts = zeta(d, Dyadic::from_u64(x));
      REQUIRE(parts.size() == static_cast<std::size_t>(d));
      for (int r = 1; r <= d; ++r) {
        const auto want = deinterleave_bits(x, d, r);
        for (std::size_t j = 0; j < want.size(); ++j) CHECK(parts[r - 1].bit(j + 1) == want[j]);
        CHECK(parts[r - 1].bit_length() <= want.size());
      }
      CHECK(zeta_inv(d, parts) == Dyadic::from_u64(x));
    }
  }
}

TEST_CASE("zeta_inv pads uneven coordinates") {
  std::vector<Dyadic> c{Dyadic::from_binary("0.1"), Dyadic::from_binary("0.011")};
  auto x = zeta_inv(2, c);
  CHECK(x == Dyadic::from_binary("0.100101"));
  CHECK(zeta(2, x) == c);
  CHECK_THROWS(zeta_inv(3, c));
}

TEST_CASE("multiplication modulo one") {
  CHECK(Dyadic::from_binary("0.01").times_mod1(3) == Dyadic::from_binary("0.11"));
  CHECK(Dyadic::from_binary("0.11").times_mod1(2) == Dyadic::from_binary("0.1"));
  CHECK(Dyadic::from_binary("0.101").floor_times(5) == 3);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 500; ++t) {
    const std::uint64_t x = rng();
    const std::uint64_t m = 1 + rng() % 1000;
    const unsigned __int128 p = static_cast<unsigned __int128>(x) * m;
    const Dyadic d = Dyadic::from_u64(x);
    CHECK(d.floor_times(m) == static_cast<std::uint64_t>(p >> 64));
    CHECK(d.times_mod1(m) == Dyadic::from_u64(static_cast<std::uint64_t>(p)));
  }
}

TEST_CASE("torus coordinates shift symbolically") {
  TorusCoord h{Dyadic::from_binary("0.01"), 0};
  auto g = h.plus_sqrt2().plus_sqrt2();
  CHECK(g.c == 2);
  CHECK(g.q == h.q);
  CHECK_FALSE(g == h);
}

TEST_CASE("ordering follows the numeric value") {
  CHECK(Dyadic::from_binary("0.011") < Dyadic::from_binary("0.1"));
  CHECK(Dyadic::from_binary("0.1") < Dyadic::from_binary("0.1000001"));
  CHECK(Dyadic() < Dyadic::from_u64(1));
}
