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

// Frame transports. A transport sends one request frame and returns the
// reply frame; it knows nothing about message contents.
//
// TCP framing: each frame is preceded by its length as a little-endian u32.
// A connection may carry any number of request / reply exchanges.

#ifndef CLOUDADAPT_PROTOCOL_TRANSPORT_H_
#define CLOUDADAPT_PROTOCOL_TRANSPORT_H_

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "cloudadapt/common/bytes.h"
#include "cloudadapt/protocol/messages.h"

namespace cloudadapt::protocol {

// Must be safe to call from several threads at once.
using FrameHandler = std::function<Bytes(std::span<const std::uint8_t>)>;

class Transport {
 public:
  virtual ~Transport() = default;
  // Throws Error(kTransport) when no reply could be obtained.
  virtual Bytes RoundTrip(std::span<const std::uint8_t> request) = 0;
};

// Calls the handler directly.
class InProcessTransport : public Transport {
 public:
  explicit InProcessTransport(FrameHandler handler) : handler_(std::move(handler)) {}
  Bytes RoundTrip(std::span<const std::uint8_t> request) override {
    return handler_(request);
  }

 private:
  FrameHandler handler_;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;  // 0 picks a free port
  std::size_t max_concurrent = 8;
  std::size_t max_frame_bytes = kMaxFrameBytes;
  // Fault injection: the first N requests are read and then answered by
  // closing the connection.
  std::size_t drop_first_requests = 0;
};

class TcpServer {
 public:
  TcpServer(FrameHandler handler, ServerOptions options);
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  std::uint16_t port() const { return port_; }
  std::uint64_t requests_served() const { return served_.load(); }

  // Stops accepting, lets every in-flight request finish and be answered,
  // then closes all connections. Idempotent.
  void Stop();

 private:
  struct Connection;
  class Slots;

  void AcceptLoop();
  void Serve(int fd, Connection* connection);
  void Reap(bool all);

  FrameHandler handler_;
  ServerOptions options_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> served_{0};
  std::atomic<std::size_t> drops_left_{0};
  std::unique_ptr<Slots> slots_;
  std::thread acceptor_;
  std::mutex connections_mutex_;
  std::vector<std::unique_ptr<Connection>> connections_;
};

struct ClientOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  int timeout_ms = 10000;
  std::size_t max_attempts = 3;
  int retry_backoff_ms = 20;
};

// Keeps one connection open and reconnects on failure. Every exchange is
// retried up to max_attempts times, which is safe because the service is
// stateless. Not thread-safe; use one client per thread.
class TcpTransport : public Transport {
 public:
  explicit TcpTransport(ClientOptions options);
  ~TcpTransport() override;
  TcpTransport(const TcpTransport&) = delete;
  TcpTransport& operator=(const TcpTransport&) = delete;

  Bytes RoundTrip(std::span<const std::uint8_t> request) override;
  std::size_t reconnects() const { return reconnects_; }

 private:
  void Connect();
  void Close();
  Bytes Exchange(std::span<const std::uint8_t> request);

  ClientOptions options_;
  int fd_ = -1;
  std::size_t connects_ = 0;
  std::size_t reconnects_ = 0;
};

}  // namespace cloudadapt::protocol

#endif  // CLOUDADAPT_PROTOCOL_TRANSPORT_H_
