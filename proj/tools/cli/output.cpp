#include "output.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "traincap/error.hpp"

namespace traincap::cli {

namespace {

using nlohmann::json;

const std::vector<std::string> kRecordColumns{
    "train_id", "n_packets", "desired_rate_bps", "est_send_rate_bps", "est_recv_rate_bps",
    "status"};

std::optional<double> try_estimate(double (*fn)(const TrainRecord&), const TrainRecord& rec) {
  try {
    return fn(rec);
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::string join(const std::vector<std::int64_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ';';
    s += std::to_string(v[i]);
  }
  return s;
}

std::vector<std::int64_t> split_ints(const std::string& s) {
  std::vector<std::int64_t> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t end = s.find(';', pos);
    if (end == std::string::npos) end = s.size();
    out.push_back(std::stoll(s.substr(pos, end - pos)));
    pos = end + 1;
  }
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::invalid_argument("bad number '" + s + "'");
  }
  return v;
}

std::string cell_text(const Cell& c) {
  struct {
    std::string operator()(std::monostate) const { return {}; }
    std::string operator()(const std::string& s) const { return s; }
    std::string operator()(double d) const { return format_double(d); }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(std::uint64_t u) const { return std::to_string(u); }
  } visitor;
  return std::visit(visitor, c);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

OutputRecord to_output(const TrainRecord& rec, bool with_timestamps) {
  OutputRecord o;
  o.train_id = rec.train_id;
  o.n_packets = rec.spec.n_packets;
  o.desired_rate_bps = rec.spec.desired_rate_bps;
  o.est_send_rate_bps = try_estimate(estimate_send_rate, rec);
  o.est_recv_rate_bps = try_estimate(estimate_receive_rate, rec);
  o.status = std::string(to_string(rec.status));
  if (with_timestamps) {
    o.send_ts = rec.send_ts;
    o.recv_ts = rec.recv_ts;
  }
  return o;
}

void write_records(std::ostream& os, const std::vector<OutputRecord>& records, Format fmt) {
  const bool with_ts = std::any_of(records.begin(), records.end(),
                                   [](const auto& r) { return r.send_ts || r.recv_ts; });
  if (fmt == Format::json) {
    json arr = json::array();
    for (const auto& r : records) {
      json j{{"train_id", r.train_id},
             {"n_packets", r.n_packets},
             {"desired_rate_bps", r.desired_rate_bps},
             {"status", r.status}};
      if (r.est_send_rate_bps) j["est_send_rate_bps"] = *r.est_send_rate_bps;
      if (r.est_recv_rate_bps) j["est_recv_rate_bps"] = *r.est_recv_rate_bps;
      if (r.send_ts || r.recv_ts) {
        json ts = json::object();
        if (r.send_ts) ts["send"] = *r.send_ts;
        if (r.recv_ts) ts["recv"] = *r.recv_ts;
        j["timestamps"] = std::move(ts);
      }
      arr.push_back(std::move(j));
    }
    os << arr.dump(2) << '\n';
    return;
  }

  for (std::size_t i = 0; i < kRecordColumns.size(); ++i) os << (i ? "," : "") << kRecordColumns[i];
  if (with_ts) os << ",send_ts,recv_ts";
  os << '\n';
  for (const auto& r : records) {
    os << r.train_id << ',' << r.n_packets << ',' << r.desired_rate_bps << ','
       << (r.est_send_rate_bps ? format_double(*r.est_send_rate_bps) : "") << ','
       << (r.est_recv_rate_bps ? format_double(*r.est_recv_rate_bps) : "") << ',' << r.status;
    if (with_ts) {
      os << ',' << (r.send_ts ? join(*r.send_ts) : "") << ','
         << (r.recv_ts ? join(*r.recv_ts) : "");
    }
    os << '\n';
  }
}

std::vector<OutputRecord> read_records(std::istream& is, Format fmt) {
  std::vector<OutputRecord> out;
  if (fmt == Format::json) {
    json arr;
    try {
      arr = json::parse(is);
    } catch (const json::exception& e) {
      throw std::invalid_argument(std::string("bad JSON input: ") + e.what());
    }
    if (!arr.is_array()) throw std::invalid_argument("expected a JSON array of train records");
    for (const auto& j : arr) {
      OutputRecord r;
      try {
        r.train_id = j.at("train_id").get<std::uint32_t>();
        r.n_packets = j.at("n_packets").get<std::uint32_t>();
        r.desired_rate_bps = j.at("desired_rate_bps").get<std::uint64_t>();
        r.status = j.at("status").get<std::string>();
        if (j.contains("est_send_rate_bps")) {
          r.est_send_rate_bps = j["est_send_rate_bps"].get<double>();
        }
        if (j.contains("est_recv_rate_bps")) {
          r.est_recv_rate_bps = j["est_recv_rate_bps"].get<double>();
        }
        if (j.contains("timestamps")) {
          const auto& ts = j["timestamps"];
          if (ts.contains("send")) r.send_ts = ts["send"].get<std::vector<std::int64_t>>();
          if (ts.contains("recv")) r.recv_ts = ts["recv"].get<std::vector<std::int64_t>>();
        }
      } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("bad train record: ") + e.what());
      }
      out.push_back(std::move(r));
    }
    return out;
  }

  std::string line;
  if (!std::getline(is, line)) return out;
  const auto header = split_csv_line(line);
  if (header.size() < kRecordColumns.size() ||
      !std::equal(kRecordColumns.begin(), kRecordColumns.end(), header.begin())) {
    throw std::invalid_argument("unexpected CSV header");
  }
  const bool with_ts = header.size() == kRecordColumns.size() + 2;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) throw std::invalid_argument("CSV row has wrong field count");
    OutputRecord r;
    try {
      r.train_id = static_cast<std::uint32_t>(std::stoul(f[0]));
      r.n_packets = static_cast<std::uint32_t>(std::stoul(f[1]));
      r.desired_rate_bps = std::stoull(f[2]);
      if (!f[3].empty()) r.est_send_rate_bps = parse_double(f[3]);
      if (!f[4].empty()) r.est_recv_rate_bps = parse_double(f[4]);
      r.status = f[5];
      if (with_ts) {
        if (!f[6].empty()) r.send_ts = split_ints(f[6]);
        if (!f[7].empty()) r.recv_ts = split_ints(f[7]);
      }
    } catch (const std::logic_error& e) {
      throw std::invalid_argument(std::string("bad CSV row: ") + e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_table(std::ostream& os, const Table& table, Format fmt) {
  if (fmt == Format::json) {
    json arr = json::array();
    for (const auto& row : table.rows) {
      json j = json::object();
      for (std::size_t i = 0; i < table.columns.size() && i < row.size(); ++i) {
        std::visit(
            [&](const auto& v) {
              using T = std::decay_t<decltype(v)>;
              if constexpr (!std::is_same_v<T, std::monostate>) j[table.columns[i]] = v;
            },
            row[i]);
      }
      arr.push_back(std::move(j));
    }
    os << arr.dump(2) << '\n';
    return;
  }
  for (std::size_t i = 0; i < table.columns.size(); ++i) os << (i ? "," : "") << table.columns[i];
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << cell_text(row[i]);
    os << '\n';
  }
}

}  // namespace traincap::cli
