#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "traincap/train.hpp"

namespace traincap::cli {

enum class Format { csv, json };

/// One emitted train. Rates are bits/s and always come from a TrainRecord.
struct OutputRecord {
  std::uint32_t train_id = 0;
  std::uint32_t n_packets = 0;
  std::uint64_t desired_rate_bps = 0;
  std::optional<double> est_send_rate_bps;
  std::optional<double> est_recv_rate_bps;
  std::string status;
  std::optional<std::vector<std::int64_t>> send_ts;
  std::optional<std::vector<std::int64_t>> recv_ts;
};

/// Estimates whatever the record supports; degenerate or invalid sides are
/// left empty.
OutputRecord to_output(const TrainRecord& rec, bool with_timestamps);

void write_records(std::ostream& os, const std::vector<OutputRecord>& records, Format fmt);

/// Reads records back from either format. Throws std::invalid_argument.
std::vector<OutputRecord> read_records(std::istream& is, Format fmt);

/// Generic report table for experiment and summary output.
using Cell = std::variant<std::monostate, std::string, double, std::int64_t, std::uint64_t>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

/// CSV: header plus one line per row, empty fields for missing cells.
/// JSON: array of objects, missing cells omitted.
void write_table(std::ostream& os, const Table& table, Format fmt);

/// Shortest decimal text that round-trips the double.
std::string format_double(double v);

}  // namespace traincap::cli
