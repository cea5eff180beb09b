#include "rate_parse.hpp"

#include <cctype>
#include <limits>
#include <stdexcept>
#include <string>

namespace traincap::cli {

namespace {

// mantissa digits and a power-of-ten exponent, e.g. "2.5e3" -> (25, 2)
struct Decimal {
  std::uint64_t digits = 0;
  int exp10 = 0;
};

[[noreturn]] void bad(std::string_view what, std::string_view text) {
  throw std::invalid_argument(std::string(what) + ": '" + std::string(text) + "'");
}

// Consumes a decimal number with optional fraction and exponent from the
// front of `s`, leaving the unparsed suffix.
Decimal take_decimal(std::string_view& s, std::string_view text) {
  Decimal d;
  bool any = false;
  std::size_t i = 0;
  auto push = [&](char c) {
    if (d.digits > (std::numeric_limits<std::uint64_t>::max() - 9) / 10) {
      bad("number too large", text);
    }
    d.digits = d.digits * 10 + static_cast<std::uint64_t>(c - '0');
  };
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
    push(s[i++]);
    any = true;
  }
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
      push(s[i++]);
      --d.exp10;
      any = true;
    }
  }
  if (!any) bad("expected a number", text);
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    std::size_t j = i + 1;
    bool neg = false;
    if (j < s.size() && (s[j] == '+' || s[j] == '-')) neg = s[j++] == '-';
    int e = 0;
    bool exp_digits = false;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) {
      e = e * 10 + (s[j++] - '0');
      if (e > 400) bad("exponent out of range", text);
      exp_digits = true;
    }
    if (!exp_digits) bad("malformed exponent", text);
    d.exp10 += neg ? -e : e;
    i = j;
  }
  s.remove_prefix(i);
  return d;
}

std::uint64_t to_integer(Decimal d, std::string_view text) {
  while (d.exp10 < 0) {
    if (d.digits % 10 != 0) bad("value is not a whole number", text);
    d.digits /= 10;
    ++d.exp10;
  }
  while (d.exp10 > 0) {
    if (d.digits > std::numeric_limits<std::uint64_t>::max() / 10) bad("value too large", text);
    d.digits *= 10;
    --d.exp10;
  }
  return d.digits;
}

}  // namespace

std::uint64_t parse_rate(std::string_view text) {
  std::string_view s = text;
  Decimal d = take_decimal(s, text);
  if (s.size() > 1) bad("unknown rate suffix", text);
  if (s.size() == 1) {
    switch (s[0]) {
      case 'k': case 'K': d.exp10 += 3; break;
      case 'M': d.exp10 += 6; break;
      case 'G': case 'g': d.exp10 += 9; break;
      case 'T': d.exp10 += 12; break;
      default: bad("unknown rate suffix", text);
    }
  }
  const std::uint64_t v = to_integer(d, text);
  if (v == 0) bad("rate must be positive", text);
  return v;
}

std::chrono::nanoseconds parse_duration(std::string_view text) {
  std::string_view s = text;
  Decimal d = take_decimal(s, text);
  if (s == "s") d.exp10 += 9;
  else if (s == "ms") d.exp10 += 6;
  else if (s == "us") d.exp10 += 3;
  else if (!s.empty() && s != "ns") bad("unknown duration unit", text);
  const std::uint64_t v = to_integer(d, text);
  if (v > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
    bad("duration too large", text);
  }
  return std::chrono::nanoseconds(static_cast<std::int64_t>(v));
}

}  // namespace traincap::cli
