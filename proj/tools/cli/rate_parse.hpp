#pragma once

#include <chrono>
#include <cstdint>
#include <string_view>

namespace traincap::cli {

/// Parses a rate in bits/s: plain integers, scientific notation ("10e9",
/// "1.5e8") and decimal suffixes k/M/G/T ("2.5G", "100M"). The value is
/// computed exactly in decimal and must be a positive whole number of bits/s.
/// Throws std::invalid_argument.
std::uint64_t parse_rate(std::string_view text);

/// Parses a duration: an integer or decimal with unit ns/us/ms/s
/// ("10ms", "200us"); a bare number is nanoseconds.
std::chrono::nanoseconds parse_duration(std::string_view text);

}  // namespace traincap::cli
