#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace traincap::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitTransport = 3,
  kExitNoValidTrains = 4,
};

/// Entry point shared by the traincap binary and the tests. `args` excludes
/// the program name. Records go to `out` (or --out-file), diagnostics and
/// usage text to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Port used when --port is absent: $TRAINCAP_PORT if set and valid, else 8620.
std::uint16_t default_port();

}  // namespace traincap::cli
