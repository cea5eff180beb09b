#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "traincap/train.hpp"

namespace traincap {

/// Min / max / mean / sample std / relative std over a set of rates.
struct RateStats {
  std::size_t count = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double std = 0.0;                       // n-1 denominator; 0 for a single value
  std::optional<double> rel_std_percent;  // 100 * std / mean, only when mean > 0
};

/// Throws Error(empty_input) on an empty list.
RateStats aggregate_stats(std::span<const double> rates);

/// Median; the mean of the two middle values for even counts.
/// Throws Error(empty_input) on an empty list.
double median(std::span<const double> values);

/// Capacity report for an otherwise empty link: the receive rate of each
/// valid train estimates the available capacity directly, and the median
/// across trains is the reported figure.
struct ApcReport {
  std::vector<double> receive_rates_bps;  // valid trains, in record order
  std::size_t valid_trains = 0;
  std::size_t total_trains = 0;
  std::optional<double> apc_estimate_bps;  // empty when no train was valid

  bool ok() const noexcept { return apc_estimate_bps.has_value(); }
};

ApcReport make_apc_report(std::span<const TrainRecord> records);

}  // namespace traincap
