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

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dlcmd/bytes.hpp"
#include "dlcmd/chunk_grid.hpp"
#include "dlcmd/tensor.hpp"

namespace dlcmd {

enum class MessageType : std::uint8_t { compressed = 1, dense = 2, control = 3 };

const char* message_type_name(MessageType type);

// Collective failures carry the rank of the offending peer (-1 if none).
class CollectiveError : public std::runtime_error {
 public:
  CollectiveError(const std::string& what, int peer) : std::runtime_error(what), peer_(peer) {}
  int peer() const { return peer_; }

 private:
  int peer_;
};

class RoundMismatchError : public CollectiveError {
 public:
  using CollectiveError::CollectiveError;
};

class PeerDisconnectedError : public CollectiveError {
 public:
  using CollectiveError::CollectiveError;
};

class CollectiveTimeoutError : public CollectiveError {
 public:
  using CollectiveError::CollectiveError;
};

class MalformedFrameError : public CollectiveError {
 public:
  using CollectiveError::CollectiveError;
};

struct TrafficEntry {
  std::uint32_t round;
  MessageType type;
  std::uint64_t sent;
  std::uint64_t received;
};

// Byte counters for one worker under the full-mesh model: a payload of B
// bytes costs B per peer in each direction. The worker's own contribution is
// never counted.
class CommMeter {
 public:
  void record(std::uint32_t round, MessageType type, std::uint64_t sent, std::uint64_t received);

  std::uint64_t bytes_sent() const { return sent_; }
  std::uint64_t bytes_received() const { return received_; }
  const std::vector<TrafficEntry>& log() const { return log_; }

 private:
  std::uint64_t sent_ = 0;
  std::uint64_t received_ = 0;
  std::vector<TrafficEntry> log_;
};

// One worker's handle onto a group of `world_size` workers. Every call is a
// blocking rendezvous: it returns only after all workers contributed, and all
// workers must issue the same sequence of calls with matching round ids.
class Collective {
 public:
  Collective(int rank, int world_size);
  virtual ~Collective() = default;

  Collective(const Collective&) = delete;
  Collective& operator=(const Collective&) = delete;

  int rank() const { return rank_; }
  int world_size() const { return world_; }
  const CommMeter& meter() const { return meter_; }

  // Compressed payloads of every worker, ordered by rank. Metered.
  std::vector<Bytes> all_gather(std::uint32_t round, const Bytes& payload);

  // Rank-ordered mean accumulated in double; bitwise identical on every
  // worker. Metered at 4 bytes per element per peer and direction.
  DenseTensor dense_all_reduce(std::uint32_t round, std::uint16_t tensor_id, const DenseTensor& t);

  // Diagnostics and barriers. Not metered.
  std::vector<Bytes> gather_control(std::uint32_t round, const Bytes& payload);
  void barrier(std::uint32_t round);

 protected:
  // Returns one body per rank in rank order, this worker's own included.
  virtual std::vector<Bytes> exchange(MessageType type, std::uint32_t round, const Bytes& body) = 0;

 private:
  int rank_;
  int world_;
  CommMeter meter_;
};

// Effective per-chunk k for one tensor: k clamped to the chunk volume.
std::int64_t effective_k(const ChunkGrid& grid, std::int64_t k);

// Exact body size of one compressed all-gather contribution.
std::uint64_t payload_size(std::span<const ChunkGrid> grids, std::int64_t k);

// Metered bytes of one dense all-reduce over every tensor.
std::uint64_t dense_payload_size(std::span<const Shape> shapes);

}  // namespace dlcmd
