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

#include "dlcmd/tcp_collective.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <sstream>
#include <thread>

#include "dlcmd/wire.hpp"

namespace dlcmd {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint32_t kHelloRound = 0xFFFFFFFFu;

std::string errno_text() { return std::strerror(errno); }

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return left > 0 ? static_cast<int>(left) : 0;
}

sockaddr_in resolve(const PeerAddress& addr) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const int rc = ::getaddrinfo(addr.host.c_str(), nullptr, &hints, &res);
  if (rc != 0 || res == nullptr) {
    throw std::runtime_error("cannot resolve host '" + addr.host + "': " + ::gai_strerror(rc));
  }
  sockaddr_in out{};
  std::memcpy(&out, res->ai_addr, sizeof(out));
  ::freeaddrinfo(res);
  out.sin_port = htons(addr.port);
  return out;
}

void set_nonblocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

// Blocking exact write/read used only during mesh setup.
void write_all(int fd, const std::uint8_t* data, std::size_t n, int peer) {
  while (n > 0) {
    const auto sent = ::send(fd, data, n, MSG_NOSIGNAL);
    if (sent < 0) {
      if (errno == EINTR) continue;
      throw PeerDisconnectedError("send to rank " + std::to_string(peer) + " failed: " + errno_text(), peer);
    }
    data += sent;
    n -= static_cast<std::size_t>(sent);
  }
}

void read_all(int fd, std::uint8_t* data, std::size_t n, Clock::time_point deadline, int peer) {
  while (n > 0) {
    pollfd p{fd, POLLIN, 0};
    const int rc = ::poll(&p, 1, remaining_ms(deadline));
    if (rc == 0) throw CollectiveTimeoutError("timed out during handshake with rank " + std::to_string(peer), peer);
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error("poll failed: " + errno_text());
    }
    const auto got = ::recv(fd, data, n, 0);
    if (got == 0) throw PeerDisconnectedError("rank " + std::to_string(peer) + " closed the connection", peer);
    if (got < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw PeerDisconnectedError("recv from rank " + std::to_string(peer) + " failed: " + errno_text(), peer);
    }
    data += got;
    n -= static_cast<std::size_t>(got);
  }
}

Socket connect_with_retry(const PeerAddress& addr, Clock::time_point deadline, int peer) {
  const sockaddr_in sa = resolve(addr);
  while (true) {
    Socket s(::socket(AF_INET, SOCK_STREAM, 0));
    if (!s.valid()) throw std::runtime_error("socket() failed: " + errno_text());
    if (::connect(s.fd(), reinterpret_cast<const sockaddr*>(&sa), sizeof(sa)) == 0) return s;
    if (Clock::now() >= deadline) {
      throw CollectiveTimeoutError("could not connect to rank " + std::to_string(peer) + " at " + addr.host + ":" +
                                       std::to_string(addr.port) + ": " + errno_text(),
                                   peer);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

}  // namespace

PeerAddress parse_address(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw std::invalid_argument("address '" + text + "' is not host:port");
  }
  PeerAddress addr{text.substr(0, colon), 0};
  const auto port_text = text.substr(colon + 1);
  std::size_t used = 0;
  unsigned long port = 0;
  try {
    port = std::stoul(port_text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != port_text.size() || port > 65535) throw std::invalid_argument("address '" + text + "' has a bad port");
  addr.port = static_cast<std::uint16_t>(port);
  return addr;
}

std::vector<PeerAddress> parse_peer_list(const std::string& text) {
  std::vector<std::pair<int, PeerAddress>> entries;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("peer entry '" + item + "' is not rank=host:port");
    int rank = -1;
    try {
      rank = std::stoi(item.substr(0, eq));
    } catch (const std::exception&) {
      throw std::invalid_argument("peer entry '" + item + "' has a bad rank");
    }
    entries.emplace_back(rank, parse_address(item.substr(eq + 1)));
  }
  if (entries.empty()) throw std::invalid_argument("peer list is empty");
  std::vector<PeerAddress> peers(entries.size());
  std::vector<bool> seen(entries.size(), false);
  for (auto& [rank, addr] : entries) {
    if (rank < 0 || rank >= static_cast<int>(entries.size()) || seen[static_cast<std::size_t>(rank)]) {
      throw std::invalid_argument("peer list must name each rank 0.." + std::to_string(entries.size() - 1) + " once");
    }
    seen[static_cast<std::size_t>(rank)] = true;
    peers[static_cast<std::size_t>(rank)] = std::move(addr);
  }
  return peers;
}

Socket::~Socket() {
  if (fd_ >= 0) ::close(fd_);
}

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = other.release();
  }
  return *this;
}

TcpListener::TcpListener(const PeerAddress& bind_address) : socket_(::socket(AF_INET, SOCK_STREAM, 0)) {
  if (!socket_.valid()) throw std::runtime_error("socket() failed: " + errno_text());
  int one = 1;
  ::setsockopt(socket_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in sa = resolve(bind_address);
  if (::bind(socket_.fd(), reinterpret_cast<const sockaddr*>(&sa), sizeof(sa)) != 0) {
    throw std::runtime_error("cannot bind " + bind_address.host + ":" + std::to_string(bind_address.port) + ": " +
                             errno_text());
  }
  if (::listen(socket_.fd(), 64) != 0) throw std::runtime_error("listen() failed: " + errno_text());
  socklen_t len = sizeof(sa);
  ::getsockname(socket_.fd(), reinterpret_cast<sockaddr*>(&sa), &len);
  port_ = ntohs(sa.sin_port);
}

TcpCollective::TcpCollective(int rank, std::vector<PeerAddress> peers, TcpListener listener,
                             std::chrono::milliseconds timeout)
    : Collective(rank, static_cast<int>(peers.size())), timeout_(timeout), links_(peers.size()) {
  const auto deadline = Clock::now() + timeout_;
  const int world = world_size();

  for (int peer = 0; peer < rank; ++peer) {
    Socket s = connect_with_retry(peers[static_cast<std::size_t>(peer)], deadline, peer);
    const auto hello = wire::encode_header({MessageType::control, kHelloRound, static_cast<std::uint16_t>(rank), 0});
    write_all(s.fd(), hello.data(), hello.size(), peer);
    links_[static_cast<std::size_t>(peer)] = std::move(s);
  }

  for (int pending = world - 1 - rank; pending > 0; --pending) {
    pollfd p{listener.socket().fd(), POLLIN, 0};
    const int rc = ::poll(&p, 1, remaining_ms(deadline));
    if (rc <= 0) throw CollectiveTimeoutError("timed out waiting for higher ranks to connect", -1);
    Socket s(::accept(listener.socket().fd(), nullptr, nullptr));
    if (!s.valid()) throw std::runtime_error("accept() failed: " + errno_text());
    std::array<std::uint8_t, wire::kHeaderBytes> buf{};
    read_all(s.fd(), buf.data(), buf.size(), deadline, -1);
    const auto hello = wire::decode_header(buf, -1);
    const int peer = hello.rank;
    if (hello.type != MessageType::control || hello.round != kHelloRound || peer <= rank || peer >= world ||
        links_[static_cast<std::size_t>(peer)].valid()) {
      throw MalformedFrameError("unexpected handshake from rank " + std::to_string(peer), peer);
    }
    links_[static_cast<std::size_t>(peer)] = std::move(s);
  }

  for (int peer = 0; peer < world; ++peer) {
    if (peer == rank) continue;
    set_nonblocking(links_[static_cast<std::size_t>(peer)].fd());
    set_nodelay(links_[static_cast<std::size_t>(peer)].fd());
  }
}

std::vector<Bytes> TcpCollective::exchange(MessageType type, std::uint32_t round, const Bytes& body) {
  const int world = world_size();
  const int me = rank();
  std::vector<Bytes> out(static_cast<std::size_t>(world));
  out[static_cast<std::size_t>(me)] = body;
  if (world == 1) return out;

  const auto header = wire::encode_header({type, round, static_cast<std::uint16_t>(me), body.size()});
  Bytes frame(header.begin(), header.end());
  frame.insert(frame.end(), body.begin(), body.end());

  struct PeerIo {
    std::size_t sent = 0;
    std::array<std::uint8_t, wire::kHeaderBytes> header{};
    std::size_t header_got = 0;
    bool have_header = false;
    std::size_t body_got = 0;
    bool done_recv = false;
  };
  std::vector<PeerIo> io(static_cast<std::size_t>(world));

  const auto deadline = Clock::now() + timeout_;
  std::vector<pollfd> fds;
  std::vector<int> fd_peer;
  while (true) {
    fds.clear();
    fd_peer.clear();
    for (int peer = 0; peer < world; ++peer) {
      if (peer == me) continue;
      auto& st = io[static_cast<std::size_t>(peer)];
      short events = 0;
      if (st.sent < frame.size()) events |= POLLOUT;
      if (!st.done_recv) events |= POLLIN;
      if (events == 0) continue;
      fds.push_back({links_[static_cast<std::size_t>(peer)].fd(), events, 0});
      fd_peer.push_back(peer);
    }
    if (fds.empty()) break;

    const int rc = ::poll(fds.data(), fds.size(), remaining_ms(deadline));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error("poll failed: " + errno_text());
    }
    if (rc == 0) {
      int waiting = fd_peer.front();
      for (int p : fd_peer) {
        if (!io[static_cast<std::size_t>(p)].done_recv) {
          waiting = p;
          break;
        }
      }
      throw CollectiveTimeoutError("collective timed out in round " + std::to_string(round) + " waiting for rank " +
                                       std::to_string(waiting),
                                   waiting);
    }

    for (std::size_t i = 0; i < fds.size(); ++i) {
      const int peer = fd_peer[i];
      const int fd = fds[i].fd;
      auto& st = io[static_cast<std::size_t>(peer)];
      const auto revents = fds[i].revents;

      if ((revents & POLLOUT) && st.sent < frame.size()) {
        const auto n = ::send(fd, frame.data() + st.sent, frame.size() - st.sent, MSG_NOSIGNAL | MSG_DONTWAIT);
        if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) {
          throw PeerDisconnectedError("send to rank " + std::to_string(peer) + " failed: " + errno_text(), peer);
        }
        if (n > 0) st.sent += static_cast<std::size_t>(n);
      }

      if ((revents & (POLLIN | POLLHUP | POLLERR)) && !st.done_recv) {
        std::uint8_t* dst = nullptr;
        std::size_t want = 0;
        if (!st.have_header) {
          dst = st.header.data() + st.header_got;
          want = st.header.size() - st.header_got;
        } else {
          auto& buf = out[static_cast<std::size_t>(peer)];
          dst = buf.data() + st.body_got;
          want = buf.size() - st.body_got;
        }
        const auto n = ::recv(fd, dst, want, MSG_DONTWAIT);
        if (n == 0) throw PeerDisconnectedError("rank " + std::to_string(peer) + " disconnected", peer);
        if (n < 0) {
          if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) continue;
          throw PeerDisconnectedError("recv from rank " + std::to_string(peer) + " failed: " + errno_text(), peer);
        }
        if (!st.have_header) {
          st.header_got += static_cast<std::size_t>(n);
          if (st.header_got == st.header.size()) {
            const auto h = wire::decode_header(st.header, peer);
            if (h.rank != peer) {
              throw MalformedFrameError("frame on rank " + std::to_string(peer) + "'s link claims rank " +
                                            std::to_string(h.rank),
                                        peer);
            }
            if (h.round != round) {
              throw RoundMismatchError("rank " + std::to_string(peer) + " is in round " + std::to_string(h.round) +
                                           ", rank " + std::to_string(me) + " in round " + std::to_string(round),
                                       peer);
            }
            if (h.type != type) {
              throw MalformedFrameError(std::string("rank ") + std::to_string(peer) + " sent a " +
                                            message_type_name(h.type) + " message, expected " +
                                            message_type_name(type),
                                        peer);
            }
            st.have_header = true;
            out[static_cast<std::size_t>(peer)].resize(static_cast<std::size_t>(h.body_length));
            if (h.body_length == 0) st.done_recv = true;
          }
        } else {
          st.body_got += static_cast<std::size_t>(n);
          if (st.body_got == out[static_cast<std::size_t>(peer)].size()) st.done_recv = true;
        }
      }
    }
  }
  return out;
}

}  // namespace dlcmd
