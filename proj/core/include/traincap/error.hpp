#pragma once

#include <stdexcept>
#include <string>

namespace traincap {

enum class Errc {
  pre_epoch_timestamp,
  timestamp_out_of_range,
  payload_too_small,
  truncated_probe,
  inconsistent_header,
  schedule_resolution,
  degenerate_duration,
  invalid_train,
  invalid_argument,
  invalid_descriptor,
  bind_failed,
  send_failed,
  recv_failed,
  unknown_preset,
  empty_input,
};

// All library failures surface as traincap::Error; code() lets callers
// branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace traincap
