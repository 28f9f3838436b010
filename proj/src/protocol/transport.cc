// Copyright 2026 The Cloudadapt Authors.
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

#include "cloudadapt/protocol/transport.h"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>

#include "cloudadapt/common/error.h"

namespace cloudadapt::protocol {
namespace {

using Clock = std::chrono::steady_clock;

constexpr int kPollSliceMs = 50;

[[noreturn]] void SocketFail(const std::string& what) {
  Fail(ErrorKind::kTransport, "{}: {}", what, std::strerror(errno));
}

int RemainingMs(Clock::time_point deadline) {
  if (deadline == Clock::time_point::max()) return kPollSliceMs;
  auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  return static_cast<int>(std::max<std::int64_t>(0, left.count()));
}

// Waits until fd is readable. Returns false on timeout or when stop is set.
bool WaitReadable(int fd, Clock::time_point deadline, const std::atomic<bool>* stop) {
  for (;;) {
    if (stop != nullptr && stop->load()) return false;
    int budget = std::min(RemainingMs(deadline), kPollSliceMs);
    pollfd p{fd, POLLIN, 0};
    int r = ::poll(&p, 1, budget);
    if (r > 0) return true;
    if (r < 0 && errno != EINTR) SocketFail("poll");
    if (Clock::now() >= deadline) return false;
  }
}

void ReadExact(int fd, std::uint8_t* out, std::size_t n, Clock::time_point deadline) {
  std::size_t got = 0;
  while (got < n) {
    if (!WaitReadable(fd, deadline, nullptr)) {
      Fail(ErrorKind::kTransport, "timed out after {} of {} bytes", got, n);
    }
    ssize_t r = ::recv(fd, out + got, n - got, 0);
    if (r == 0) Fail(ErrorKind::kTransport, "peer closed after {} of {} bytes", got, n);
    if (r < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      SocketFail("recv");
    }
    got += static_cast<std::size_t>(r);
  }
}

void WriteAll(int fd, std::span<const std::uint8_t> data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    ssize_t r = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (r < 0) {
      if (errno == EINTR) continue;
      SocketFail("send");
    }
    sent += static_cast<std::size_t>(r);
  }
}

void WriteFrame(int fd, std::span<const std::uint8_t> frame) {
  ByteWriter w;
  w.U32(static_cast<std::uint32_t>(frame.size()));
  w.Raw(frame);
  Bytes out = w.Take();
  WriteAll(fd, out);
}

std::uint32_t ReadLength(int fd, Clock::time_point deadline) {
  std::uint8_t raw[4];
  ReadExact(fd, raw, 4, deadline);
  std::uint32_t n;
  std::memcpy(&n, raw, 4);
  return n;
}

sockaddr_in Resolve(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  int rc = ::getaddrinfo(host.c_str(), nullptr, &hints, &found);
  Require(rc == 0 && found != nullptr, ErrorKind::kTransport, "cannot resolve '{}': {}",
          host, ::gai_strerror(rc));
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(found->ai_addr)->sin_addr;
  ::freeaddrinfo(found);
  return addr;
}

}  // namespace

// Bounded number of handlers running at once.
class TcpServer::Slots {
 public:
  explicit Slots(std::size_t n) : free_(n) {}
  void Acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return free_ > 0; });
    --free_;
  }
  void Release() {
    {
      std::lock_guard lock(mu_);
      ++free_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t free_;
};

struct TcpServer::Connection {
  std::thread thread;
  std::atomic<bool> done{false};
};

TcpServer::TcpServer(FrameHandler handler, ServerOptions options)
    : handler_(std::move(handler)), options_(std::move(options)) {
  Require(options_.max_concurrent > 0, ErrorKind::kConfiguration,
          "server needs a positive concurrency limit");
  drops_left_ = options_.drop_first_requests;
  slots_ = std::make_unique<Slots>(options_.max_concurrent);

  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) SocketFail("socket");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = Resolve(options_.host, options_.port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    int saved = errno;
    ::close(listen_fd_);
    errno = saved;
    SocketFail(fmt::format("bind {}:{}", options_.host, options_.port));
  }
  if (::listen(listen_fd_, 64) != 0) {
    ::close(listen_fd_);
    SocketFail("listen");
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  acceptor_ = std::thread([this] { AcceptLoop(); });
}

TcpServer::~TcpServer() { Stop(); }

void TcpServer::Stop() {
  if (stopping_.exchange(true)) return;
  if (acceptor_.joinable()) acceptor_.join();
  if (listen_fd_ >= 0) ::close(listen_fd_);
  listen_fd_ = -1;
  Reap(true);
}

void TcpServer::Reap(bool all) {
  std::lock_guard lock(connections_mutex_);
  for (auto it = connections_.begin(); it != connections_.end();) {
    if (all || (*it)->done.load()) {
      (*it)->thread.join();
      it = connections_.erase(it);
    } else {
      ++it;
    }
  }
}

void TcpServer::AcceptLoop() {
  while (!stopping_.load()) {
    pollfd p{listen_fd_, POLLIN, 0};
    int r = ::poll(&p, 1, kPollSliceMs);
    Reap(false);
    if (r <= 0) continue;
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    auto connection = std::make_unique<Connection>();
    Connection* raw = connection.get();
    std::lock_guard lock(connections_mutex_);
    connection->thread = std::thread([this, fd, raw] { Serve(fd, raw); });
    connections_.push_back(std::move(connection));
  }
}

void TcpServer::Serve(int fd, Connection* connection) {
  const auto timeout = std::chrono::seconds(30);
  try {
    // The stop flag is only checked between requests, so a request whose
    // length prefix has arrived is always answered.
    while (WaitReadable(fd, Clock::time_point::max(), &stopping_)) {
      char probe;
      if (::recv(fd, &probe, 1, MSG_PEEK) <= 0) break;  // orderly close
      std::uint32_t length = ReadLength(fd, Clock::now() + timeout);
      if (length > options_.max_frame_bytes) {
        WriteFrame(fd, EncodeError({0, WireError::kOversized}));
        break;
      }
      Bytes frame(length);
      ReadExact(fd, frame.data(), length, Clock::now() + timeout);

      std::size_t left = drops_left_.load();
      bool drop = false;
      while (left > 0 && !drop) {
        drop = drops_left_.compare_exchange_weak(left, left - 1);
      }
      if (drop) break;

      slots_->Acquire();
      Bytes reply;
      try {
        reply = handler_(frame);
      } catch (...) {
        reply = EncodeError({0, WireError::kInternal});
      }
      slots_->Release();
      // Counted before the write so a client holding its reply sees the count.
      served_.fetch_add(1);
      WriteFrame(fd, reply);
    }
  } catch (const std::exception&) {
    // A broken connection affects only its own client.
  }
  ::close(fd);
  connection->done = true;
}

TcpTransport::TcpTransport(ClientOptions options) : options_(std::move(options)) {
  Require(options_.max_attempts > 0, ErrorKind::kConfiguration,
          "client needs at least one attempt");
}

TcpTransport::~TcpTransport() { Close(); }

void TcpTransport::Close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void TcpTransport::Connect() {
  sockaddr_in addr = Resolve(options_.host, options_.port);
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) SocketFail("socket");
  timeval tv{options_.timeout_ms / 1000, (options_.timeout_ms % 1000) * 1000};
  ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    int saved = errno;
    ::close(fd);
    errno = saved;
    SocketFail(fmt::format("connect {}:{}", options_.host, options_.port));
  }
  fd_ = fd;
  if (connects_++ > 0) ++reconnects_;
}

Bytes TcpTransport::Exchange(std::span<const std::uint8_t> request) {
  if (fd_ < 0) Connect();
  const auto deadline = Clock::now() + std::chrono::milliseconds(options_.timeout_ms);
  WriteFrame(fd_, request);
  std::uint32_t length = ReadLength(fd_, deadline);
  Require(length <= kMaxFrameBytes, ErrorKind::kTransport,
          "reply of {} bytes exceeds the frame limit", length);
  Bytes reply(length);
  ReadExact(fd_, reply.data(), length, deadline);
  return reply;
}

Bytes TcpTransport::RoundTrip(std::span<const std::uint8_t> request) {
  std::string last;
  for (std::size_t attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    try {
      return Exchange(request);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kTransport) throw;
      last = e.what();
      Close();
      if (attempt < options_.max_attempts) {
        std::this_thread::sleep_for(
            std::chrono::milliseconds(options_.retry_backoff_ms * attempt));
      }
    }
  }
  Fail(ErrorKind::kTransport, "{}:{} failed after {} attempts: {}", options_.host,
       options_.port, options_.max_attempts, last);
}

}  // namespace cloudadapt::protocol
