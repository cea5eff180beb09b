#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <string>

#include "endpoints.hpp"
#include "traincap/error.hpp"
#include "traincap/pacing.hpp"

namespace traincap::detail {

namespace {

sockaddr_in resolve(const Address& a) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(a.port);
  if (a.host.empty() || a.host == "0.0.0.0") {
    sa.sin_addr.s_addr = htonl(INADDR_ANY);
    return sa;
  }
  if (inet_pton(AF_INET, a.host.c_str(), &sa.sin_addr) == 1) return sa;

  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_DGRAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(a.host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    throw Error(Errc::invalid_descriptor, "cannot resolve host '" + a.host + "'");
  }
  sa.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  freeaddrinfo(res);
  return sa;
}

Address to_address(const sockaddr_in& sa) {
  char buf[INET_ADDRSTRLEN] = {};
  inet_ntop(AF_INET, &sa.sin_addr, buf, sizeof buf);
  return {buf, ntohs(sa.sin_port)};
}

std::string sys_error(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

class UdpEndpoint final : public Endpoint {
 public:
  explicit UdpEndpoint(const BackendDescriptor& d) : desc_(d) {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) throw Error(Errc::bind_failed, sys_error("socket"));

    // Room for a full train in the kernel queue before the reader drains it.
    int rcvbuf = static_cast<int>(std::min<std::size_t>(
        d.prealloc_packets * (d.payload_size + 256), std::size_t{64} << 20));
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVBUF, &rcvbuf, sizeof rcvbuf);

    const sockaddr_in local = resolve(d.local);
    if (::bind(fd_, reinterpret_cast<const sockaddr*>(&local), sizeof local) != 0) {
      const std::string msg = sys_error("bind");
      ::close(fd_);
      throw Error(Errc::bind_failed, msg);
    }
    remote_ = resolve(d.remote);
    scratch_.resize(d.payload_size);
  }

  ~UdpEndpoint() override { ::close(fd_); }

  UdpEndpoint(const UdpEndpoint&) = delete;
  UdpEndpoint& operator=(const UdpEndpoint&) = delete;

  std::int64_t send_to(const Address& to, std::span<std::byte> payload,
                       const StampHook& stamp) override {
    const sockaddr_in dst = (to == desc_.remote) ? remote_ : resolve(to);
    std::int64_t ts = monotonic_ns();
    if (ts <= last_send_ts_) ts = last_send_ts_ + 1;
    last_send_ts_ = ts;
    if (stamp) stamp(ts, payload);
    for (;;) {
      const ssize_t n = ::sendto(fd_, payload.data(), payload.size(), 0,
                                 reinterpret_cast<const sockaddr*>(&dst), sizeof dst);
      if (n == static_cast<ssize_t>(payload.size())) return ts;
      if (n < 0 && (errno == EINTR || errno == ENOBUFS || errno == EAGAIN)) continue;
      throw Error(Errc::send_failed, sys_error("sendto"));
    }
  }

  std::optional<RecvInfo> recv_into(std::int64_t deadline_ns,
                                    std::span<std::byte> buffer) override {
    for (;;) {
      sockaddr_in src{};
      socklen_t len = sizeof src;
      const ssize_t n = ::recvfrom(fd_, buffer.data(), buffer.size(), MSG_DONTWAIT | MSG_TRUNC,
                                   reinterpret_cast<sockaddr*>(&src), &len);
      if (n >= 0) {
        const std::int64_t ts = monotonic_ns();
        return RecvInfo{std::min(static_cast<std::size_t>(n), buffer.size()), ts,
                        to_address(src)};
      }
      if (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) {
        throw Error(Errc::recv_failed, sys_error("recvfrom"));
      }
      const std::int64_t now = monotonic_ns();
      if (now >= deadline_ns) return std::nullopt;
      const std::int64_t wait = deadline_ns - now;
      timespec ts{wait / 1'000'000'000, wait % 1'000'000'000};
      pollfd pfd{fd_, POLLIN, 0};
      if (::ppoll(&pfd, 1, &ts, nullptr) < 0 && errno != EINTR) {
        throw Error(Errc::recv_failed, sys_error("ppoll"));
      }
    }
  }

  const BackendDescriptor& descriptor() const override { return desc_; }

  Address local_address() const override {
    sockaddr_in sa{};
    socklen_t len = sizeof sa;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&sa), &len);
    return to_address(sa);
  }

 private:
  BackendDescriptor desc_;
  int fd_ = -1;
  sockaddr_in remote_{};
  std::int64_t last_send_ts_ = 0;
};

}  // namespace

std::unique_ptr<Endpoint> open_udp(const BackendDescriptor& descriptor) {
  return std::make_unique<UdpEndpoint>(descriptor);
}

}  // namespace traincap::detail
