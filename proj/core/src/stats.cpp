#include "traincap/stats.hpp"

#include <algorithm>
#include <cmath>

#include "traincap/error.hpp"

namespace traincap {

RateStats aggregate_stats(std::span<const double> rates) {
  if (rates.empty()) throw Error(Errc::empty_input, "no rates to aggregate");
  RateStats s;
  s.min = rates.front();
  s.max = rates.front();
  // Welford; the unit tests recompute with a plain two-pass sum.
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (const double r : rates) {
    ++n;
    const double delta = r - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (r - mean);
    s.min = std::min(s.min, r);
    s.max = std::max(s.max, r);
  }
  s.count = n;
  s.mean = std::clamp(mean, s.min, s.max);
  s.std = n > 1 ? std::sqrt(std::max(0.0, m2) / static_cast<double>(n - 1)) : 0.0;
  if (s.mean > 0.0) s.rel_std_percent = 100.0 * s.std / s.mean;
  return s;
}

double median(std::span<const double> values) {
  if (values.empty()) throw Error(Errc::empty_input, "no values for median");
  std::vector<double> v(values.begin(), values.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return lower + (upper - lower) / 2.0;
}

ApcReport make_apc_report(std::span<const TrainRecord> records) {
  ApcReport rep;
  rep.total_trains = records.size();
  for (const auto& rec : records) {
    if (!rec.valid()) continue;
    try {
      rep.receive_rates_bps.push_back(estimate_receive_rate(rec));
    } catch (const Error&) {
      continue;
    }
  }
  rep.valid_trains = rep.receive_rates_bps.size();
  if (!rep.receive_rates_bps.empty()) rep.apc_estimate_bps = median(rep.receive_rates_bps);
  return rep;
}

}  // namespace traincap
