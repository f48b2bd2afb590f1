// Copyright 2026 The dlcmd Authors. All Rights Reserved.
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
// =============================================================================

#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "dlcmd/collective.hpp"

namespace dlcmd {

struct PeerAddress {
  std::string host;
  std::uint16_t port = 0;

  friend bool operator==(const PeerAddress&, const PeerAddress&) = default;
};

// "host:port"
PeerAddress parse_address(const std::string& text);

// "0=host:port,1=host:port,..." -> addresses indexed by rank. Every rank in
// [0, n) must appear exactly once.
std::vector<PeerAddress> parse_peer_list(const std::string& text);

// Owns a file descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release() {
    int fd = fd_;
    fd_ = -1;
    return fd;
  }

 private:
  int fd_ = -1;
};

// Bound and listening socket. Port 0 picks an ephemeral port.
class TcpListener {
 public:
  explicit TcpListener(const PeerAddress& bind_address);

  std::uint16_t port() const { return port_; }
  const Socket& socket() const { return socket_; }

 private:
  Socket socket_;
  std::uint16_t port_ = 0;
};

// Full-mesh TCP backend. The constructor connects to every lower rank and
// accepts every higher rank, so all workers must be started with the same
// peer list within `timeout`.
class TcpCollective final : public Collective {
 public:
  TcpCollective(int rank, std::vector<PeerAddress> peers, TcpListener listener,
                std::chrono::milliseconds timeout = std::chrono::seconds(30));

 protected:
  std::vector<Bytes> exchange(MessageType type, std::uint32_t round, const Bytes& body) override;

 private:
  std::chrono::milliseconds timeout_;
  std::vector<Socket> links_;  // indexed by rank; own slot empty
};

}  // namespace dlcmd
