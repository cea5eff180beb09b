#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>

#include "traincap/error.hpp"

namespace traincap::test {

// Distance in representable doubles; both arguments finite and positive.
inline std::uint64_t ulp_distance(double a, double b) {
  const auto ia = std::bit_cast<std::int64_t>(a);
  const auto ib = std::bit_cast<std::int64_t>(b);
  return ia > ib ? static_cast<std::uint64_t>(ia - ib) : static_cast<std::uint64_t>(ib - ia);
}

// Runs fn and returns the code of the traincap::Error it throws.
template <typename Fn>
Errc error_code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  throw std::logic_error("expected traincap::Error");
}

template <typename Fn>
std::string error_message_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  throw std::logic_error("expected traincap::Error");
}

}  // namespace traincap::test
