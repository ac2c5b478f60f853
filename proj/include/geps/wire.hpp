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

#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include "json.hpp"

namespace geps::wire {

/// Largest JSON payload accepted in one frame.
inline constexpr std::uint32_t kMaxFrameBytes = 16u << 20;
/// Largest raw byte run accepted after a stage frame.
inline constexpr std::uint64_t kMaxRawBytes = 1ull << 32;

enum class NetErrorKind { kRefused, kTimeout, kClosed, kAddressInUse, kOther };

class NetworkError : public std::runtime_error {
 public:
  NetworkError(NetErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  NetErrorKind kind() const { return kind_; }

 private:
  NetErrorKind kind_;
};

/// A frame arrived but its length or payload is unusable.
class FrameError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Owning file descriptor for a TCP socket.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void close();
  /// Wakes any thread blocked on this socket without releasing the fd.
  void shutdown();

 private:
  int fd_ = -1;
};

struct Address {
  std::string host;
  std::uint16_t port = 0;
  std::string str() const { return host + ":" + std::to_string(port); }
};

/// Parses "host:port" (or "host", which takes `default_port`).
Address parse_address(std::string_view text, std::uint16_t default_port);

Socket connect_tcp(const Address& addr, std::chrono::milliseconds timeout);
Socket listen_tcp(const std::string& bind_host, std::uint16_t port, int backlog = 64);
std::uint16_t local_port(const Socket& s);
/// Send and receive timeout for blocking calls; zero disables it.
void set_io_timeout(const Socket& s, std::chrono::milliseconds timeout);

void write_all(int fd, const void* data, std::size_t n);
/// Throws NetworkError(kClosed) if the peer closes first.
void read_exact(int fd, void* data, std::size_t n);

/// Byte-rate limiter shared by every transfer of one process. Pure pacing:
/// idle time earns no credit, so every byte costs 1/rate seconds. A rate of
/// zero means unlimited.
class TokenBucket {
 public:
  explicit TokenBucket(std::uint64_t bytes_per_s = 0);
  void acquire(std::size_t n);
  std::uint64_t rate() const { return rate_; }

 private:
  std::uint64_t rate_;
  std::mutex mu_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

void send_frame(int fd, const nlohmann::json& message);
/// Reads one frame. Throws FrameError for an oversized length or a payload
/// that is not a JSON object; NetworkError if the connection drops.
nlohmann::json recv_frame(int fd);

void send_raw(int fd, std::string_view bytes, TokenBucket* throttle = nullptr);
std::string recv_raw(int fd, std::size_t n, TokenBucket* throttle = nullptr);

/// Discards whatever input is already buffered or arrives within `grace`.
void drain_input(int fd, std::chrono::milliseconds grace);

}  // namespace geps::wire
