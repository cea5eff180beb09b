#pragma once

#include <memory>

#include "traincap/transport.hpp"

namespace traincap::detail {

std::unique_ptr<Endpoint> open_udp(const BackendDescriptor& descriptor);

}  // namespace traincap::detail
