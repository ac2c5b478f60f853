// Copyright 2026 The GEPS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "geps/wire.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <thread>

namespace geps::wire {

namespace {

std::string errno_text(const std::string& what, int err) {
  return what + ": " + std::strerror(err);
}

NetErrorKind kind_for(int err) {
  switch (err) {
    case ECONNREFUSED:
    case ECONNRESET:
    case EHOSTUNREACH:
    case ENETUNREACH:
      return NetErrorKind::kRefused;
    case EAGAIN:
    case ETIMEDOUT:
      return NetErrorKind::kTimeout;
    case EPIPE:
      return NetErrorKind::kClosed;
    case EADDRINUSE:
      return NetErrorKind::kAddressInUse;
    default:
      return NetErrorKind::kOther;
  }
}

[[noreturn]] void throw_errno(const std::string& what) {
  const int err = errno;
  throw NetworkError(kind_for(err), errno_text(what, err));
}

sockaddr_in resolve(const Address& addr) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(addr.port);
  const std::string host = addr.host.empty() || addr.host == "localhost" ? "127.0.0.1" : addr.host;
  if (::inet_pton(AF_INET, host.c_str(), &sa.sin_addr) == 1) return sa;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || !res)
    throw NetworkError(NetErrorKind::kRefused, "cannot resolve host " + host);
  sa.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return sa;
}

}  // namespace

Socket& Socket::operator=(Socket&& o) noexcept {
  if (this != &o) {
    close();
    fd_ = std::exchange(o.fd_, -1);
  }
  return *this;
}

void Socket::close() {
  if (fd_ >= 0) ::close(std::exchange(fd_, -1));
}

void Socket::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

Address parse_address(std::string_view text, std::uint16_t default_port) {
  Address a;
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos) {
    a.host = std::string(text);
    a.port = default_port;
    return a;
  }
  a.host = std::string(text.substr(0, colon));
  const auto digits = text.substr(colon + 1);
  unsigned port = 0;
  auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
  if (ec != std::errc() || p != digits.data() + digits.size() || port > 65535 || digits.empty())
    throw std::invalid_argument("bad address '" + std::string(text) + "'");
  a.port = static_cast<std::uint16_t>(port);
  return a;
}

Socket connect_tcp(const Address& addr, std::chrono::milliseconds timeout) {
  const sockaddr_in sa = resolve(addr);
  Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!s.valid()) throw_errno("socket");
  const int flags = ::fcntl(s.fd(), F_GETFL);
  ::fcntl(s.fd(), F_SETFL, flags | O_NONBLOCK);
  if (::connect(s.fd(), reinterpret_cast<const sockaddr*>(&sa), sizeof sa) != 0) {
    if (errno != EINPROGRESS) throw_errno("connect " + addr.str());
    pollfd p{s.fd(), POLLOUT, 0};
    const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (rc == 0) throw NetworkError(NetErrorKind::kTimeout, "connect " + addr.str() + ": timed out");
    if (rc < 0) throw_errno("poll");
    int err = 0;
    socklen_t len = sizeof err;
    ::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) throw NetworkError(kind_for(err), errno_text("connect " + addr.str(), err));
  }
  ::fcntl(s.fd(), F_SETFL, flags);
  const int one = 1;
  ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return s;
}

Socket listen_tcp(const std::string& bind_host, std::uint16_t port, int backlog) {
  Address addr{bind_host.empty() ? "0.0.0.0" : bind_host, port};
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(port);
  if (addr.host == "0.0.0.0") {
    sa.sin_addr.s_addr = htonl(INADDR_ANY);
  } else {
    sa = resolve(addr);
  }
  Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!s.valid()) throw_errno("socket");
  const int one = 1;
  ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(s.fd(), reinterpret_cast<const sockaddr*>(&sa), sizeof sa) != 0)
    throw_errno("bind " + addr.str());
  if (::listen(s.fd(), backlog) != 0) throw_errno("listen");
  return s;
}

std::uint16_t local_port(const Socket& s) {
  sockaddr_in sa{};
  socklen_t len = sizeof sa;
  if (::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&sa), &len) != 0) throw_errno("getsockname");
  return ntohs(sa.sin_port);
}

void set_io_timeout(const Socket& s, std::chrono::milliseconds timeout) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
  ::setsockopt(s.fd(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  ::setsockopt(s.fd(), SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
}

void write_all(int fd, const void* data, std::size_t n) {
  const char* p = static_cast<const char*>(data);
  while (n > 0) {
    const ssize_t w = ::send(fd, p, n, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw_errno("send");
    }
    p += w;
    n -= static_cast<std::size_t>(w);
  }
}

void read_exact(int fd, void* data, std::size_t n) {
  char* p = static_cast<char*>(data);
  while (n > 0) {
    const ssize_t r = ::recv(fd, p, n, 0);
    if (r == 0) throw NetworkError(NetErrorKind::kClosed, "connection closed by peer");
    if (r < 0) {
      if (errno == EINTR) continue;
      throw_errno("recv");
    }
    p += r;
    n -= static_cast<std::size_t>(r);
  }
}

TokenBucket::TokenBucket(std::uint64_t bytes_per_s)
    : rate_(bytes_per_s), tokens_(0), last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire(std::size_t n) {
  if (rate_ == 0 || n == 0) return;
  std::chrono::duration<double> wait{0};
  {
    std::lock_guard lock(mu_);
    const auto now = std::chrono::steady_clock::now();
    tokens_ = std::min(0.0, tokens_ + std::chrono::duration<double>(now - last_).count() *
                                          static_cast<double>(rate_));
    last_ = now;
    tokens_ -= static_cast<double>(n);
    if (tokens_ < 0) wait = std::chrono::duration<double>(-tokens_ / static_cast<double>(rate_));
  }
  if (wait.count() > 0)
    std::this_thread::sleep_for(std::chrono::duration_cast<std::chrono::microseconds>(wait));
}

void send_frame(int fd, const nlohmann::json& message) {
  const std::string body = message.dump();
  if (body.size() > kMaxFrameBytes) throw FrameError("frame too large");
  std::string frame(4, '\0');
  const auto len = static_cast<std::uint32_t>(body.size());
  for (int i = 0; i < 4; ++i) frame[i] = static_cast<char>((len >> (8 * i)) & 0xFF);
  frame += body;
  write_all(fd, frame.data(), frame.size());
}

nlohmann::json recv_frame(int fd) {
  unsigned char len_bytes[4];
  read_exact(fd, len_bytes, 4);
  const std::uint32_t len = static_cast<std::uint32_t>(len_bytes[0]) |
                            static_cast<std::uint32_t>(len_bytes[1]) << 8 |
                            static_cast<std::uint32_t>(len_bytes[2]) << 16 |
                            static_cast<std::uint32_t>(len_bytes[3]) << 24;
  if (len == 0 || len > kMaxFrameBytes)
    throw FrameError("frame length " + std::to_string(len) + " out of range");
  std::string body(len, '\0');
  read_exact(fd, body.data(), len);
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw FrameError("frame payload is not a JSON object");
  return j;
}

void send_raw(int fd, std::string_view bytes, TokenBucket* throttle) {
  constexpr std::size_t kChunk = 64 << 10;
  for (std::size_t off = 0; off < bytes.size(); off += kChunk) {
    const std::size_t n = std::min(kChunk, bytes.size() - off);
    if (throttle) throttle->acquire(n);
    write_all(fd, bytes.data() + off, n);
  }
}

std::string recv_raw(int fd, std::size_t n, TokenBucket* throttle) {
  constexpr std::size_t kChunk = 64 << 10;
  std::string out(n, '\0');
  for (std::size_t off = 0; off < n; off += kChunk) {
    const std::size_t k = std::min(kChunk, n - off);
    if (throttle) throttle->acquire(k);
    read_exact(fd, out.data() + off, k);
  }
  return out;
}

void drain_input(int fd, std::chrono::milliseconds grace) {
  char buf[4096];
  for (;;) {
    pollfd p{fd, POLLIN, 0};
    if (::poll(&p, 1, static_cast<int>(grace.count())) <= 0) return;
    const ssize_t r = ::recv(fd, buf, sizeof buf, MSG_DONTWAIT);
    if (r <= 0) return;
  }
}

}  // namespace geps::wire
