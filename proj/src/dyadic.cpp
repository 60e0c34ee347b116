#include "folim/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "folim/errors.hpp"

namespace folim {

Dyadic Dyadic::from_u64(std::uint64_t x) {
  Dyadic d;
  if (x) d.words_.push_back(x);
  return d;
}

Dyadic Dyadic::from_binary(const std::string& s) {
  if (s.rfind("0.", 0) != 0) throw InputError("binary fraction must start with '0.'");
  Dyadic d;
  for (std::size_t i = 2; i < s.size(); ++i) {
    if (s[i] != '0' && s[i] != '1') throw InputError("bad binary digit in '" + s + "'");
    if (s[i] == '1') d.set_bit(i - 1, true);
  }
  return d;
}

Dyadic Dyadic::from_hex(const std::string& s) {
  Dyadic d;
  if (s == "0") return d;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char ch = s[i];
    int v;
    if (ch >= '0' && ch <= '9') v = ch - '0';
    else if (ch >= 'a' && ch <= 'f') v = ch - 'a' + 10;
    else throw InputError("bad hex digit in '" + s + "'");
    for (int b = 0; b < 4; ++b) {
      if (v >> (3 - b) & 1) d.set_bit(4 * i + static_cast<std::size_t>(b) + 1, true);
    }
  }
  return d;
}

bool Dyadic::bit(std::size_t i) const {
  const std::size_t w = (i - 1) / 64, b = (i - 1) % 64;
  if (w >= words_.size()) return false;
  return words_[w] >> (63 - b) & 1u;
}

void Dyadic::set_bit(std::size_t i, bool value) {
  if (i == 0) throw InputError("bit positions start at 1");
  const std::size_t w = (i - 1) / 64, b = (i - 1) % 64;
  if (w >= words_.size()) {
    if (!value) return;
    words_.resize(w + 1, 0);
  }
  const std::uint64_t mask = std::uint64_t{1} << (63 - b);
  words_[w] = value ? (words_[w] | mask) : (words_[w] & ~mask);
  trim();
}

std::size_t Dyadic::bit_length() const {
  if (words_.empty()) return 0;
  const std::uint64_t last = words_.back();
  return 64 * (words_.size() - 1) + (64 - static_cast<std::size_t>(__builtin_ctzll(last)));
}

void Dyadic::trim() {
  while (!words_.empty() && words_.back() == 0) words_.pop_back();
}

Dyadic Dyadic::times_mod1(std::uint64_t m) const {
  Dyadic out;
  out.words_.resize(words_.size());
  unsigned __int128 carry = 0;
  for (std::size_t i = words_.size(); i-- > 0;) {
    unsigned __int128 p = static_cast<unsigned __int128>(words_[i]) * m + carry;
    out.words_[i] = static_cast<std::uint64_t>(p);
    carry = p >> 64;
  }
  out.trim();
  return out;
}

std::uint64_t Dyadic::floor_times(std::uint64_t m) const {
  unsigned __int128 carry = 0;
  for (std::size_t i = words_.size(); i-- > 0;) {
    unsigned __int128 p = static_cast<unsigned __int128>(words_[i]) * m + carry;
    carry = p >> 64;
  }
  return static_cast<std::uint64_t>(carry);
}

double Dyadic::to_double() const {
  double v = 0, scale = 1.0;
  for (std::size_t i = 0; i < words_.size() && i < 2; ++i) {
    scale = std::ldexp(1.0, -64 * static_cast<int>(i + 1));
    v += static_cast<double>(words_[i]) * scale;
  }
  return v;
}

std::string Dyadic::hex() const {
  if (words_.empty()) return "0";
  std::string s;
  char buf[17];
  for (auto w : words_) {
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(w));
    s += buf;
  }
  while (s.back() == '0') s.pop_back();
  return s;
}

std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b) {
  const std::size_t n = std::max(a.words_.size(), b.words_.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t x = i < a.words_.size() ? a.words_[i] : 0;
    std::uint64_t y = i < b.words_.size() ? b.words_[i] : 0;
    if (x != y) return x <=> y;
  }
  return std::strong_ordering::equal;
}

std::vector<Dyadic> zeta(int d, const Dyadic& x) {
  if (d < 1) throw InputError("zeta dimension must be positive");
  std::vector<Dyadic> out(static_cast<std::size_t>(d));
  const std::size_t len = x.bit_length();
  for (std::size_t i = 1; i <= len; ++i) {
    if (!x.bit(i)) continue;
    const std::size_t r = (i - 1) % static_cast<std::size_t>(d);
    const std::size_t pos = (i - 1) / static_cast<std::size_t>(d) + 1;
    out[r].set_bit(pos, true);
  }
  return out;
}

Dyadic zeta_inv(int d, const std::vector<Dyadic>& coords) {
  if (d < 1 || coords.size() != static_cast<std::size_t>(d)) {
    throw InputError("zeta_inv needs exactly d coordinates");
  }
  Dyadic x;
  for (std::size_t r = 0; r < coords.size(); ++r) {
    const std::size_t len = coords[r].bit_length();
    for (std::size_t t = 1; t <= len; ++t) {
      if (coords[r].bit(t)) x.set_bit((t - 1) * static_cast<std::size_t>(d) + r + 1, true);
    }
  }
  return x;
}

}  // namespace folim
