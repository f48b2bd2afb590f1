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

#include "dlcmd/collective.hpp"

#include <algorithm>

#include "dlcmd/codec.hpp"

namespace dlcmd {

const char* message_type_name(MessageType type) {
  switch (type) {
    case MessageType::compressed:
      return "compressed";
    case MessageType::dense:
      return "dense";
    case MessageType::control:
      return "control";
  }
  return "unknown";
}

void CommMeter::record(std::uint32_t round, MessageType type, std::uint64_t sent, std::uint64_t received) {
  sent_ += sent;
  received_ += received;
  log_.push_back({round, type, sent, received});
}

Collective::Collective(int rank, int world_size) : rank_(rank), world_(world_size) {
  if (world_size < 1 || rank < 0 || rank >= world_size) {
    throw std::invalid_argument("collective: rank " + std::to_string(rank) + " invalid for world size " +
                                std::to_string(world_size));
  }
}

std::vector<Bytes> Collective::all_gather(std::uint32_t round, const Bytes& payload) {
  auto gathered = exchange(MessageType::compressed, round, payload);
  if (world_ > 1) {
    std::uint64_t received = 0;
    for (int r = 0; r < world_; ++r) {
      if (r != rank_) received += gathered[static_cast<std::size_t>(r)].size();
    }
    meter_.record(round, MessageType::compressed, static_cast<std::uint64_t>(world_ - 1) * payload.size(), received);
  }
  return gathered;
}

DenseTensor Collective::dense_all_reduce(std::uint32_t round, std::uint16_t tensor_id, const DenseTensor& t) {
  Bytes body;
  body.reserve(2 + 4 * static_cast<std::size_t>(t.size()));
  ByteWriter w(body);
  w.put<std::uint16_t>(tensor_id);
  for (std::int64_t i = 0; i < t.size(); ++i) w.put_f32(t[i]);

  const auto gathered = exchange(MessageType::dense, round, body);

  std::vector<double> sum(static_cast<std::size_t>(t.size()), 0.0);
  for (int r = 0; r < world_; ++r) {
    const auto& peer = gathered[static_cast<std::size_t>(r)];
    if (peer.size() != body.size()) {
      throw MalformedFrameError("dense all-reduce: peer " + std::to_string(r) + " sent " + std::to_string(peer.size()) +
                                    " bytes, expected " + std::to_string(body.size()),
                                r);
    }
    ByteReader reader(peer);
    if (reader.get<std::uint16_t>() != tensor_id) {
      throw MalformedFrameError("dense all-reduce: peer " + std::to_string(r) + " sent a different tensor id", r);
    }
    for (auto& s : sum) s += static_cast<double>(reader.get_f32());
  }
  DenseTensor out(t.shape());
  for (std::int64_t i = 0; i < t.size(); ++i) {
    out[i] = static_cast<float>(sum[static_cast<std::size_t>(i)] / static_cast<double>(world_));
  }
  if (world_ > 1) {
    const auto bytes = static_cast<std::uint64_t>(world_ - 1) * 4u * static_cast<std::uint64_t>(t.size());
    meter_.record(round, MessageType::dense, bytes, bytes);
  }
  require_finite(out, "dense_all_reduce");
  return out;
}

std::vector<Bytes> Collective::gather_control(std::uint32_t round, const Bytes& payload) {
  return exchange(MessageType::control, round, payload);
}

void Collective::barrier(std::uint32_t round) { exchange(MessageType::control, round, {}); }

std::int64_t effective_k(const ChunkGrid& grid, std::int64_t k) { return std::min(k, grid.chunk_volume()); }

std::uint64_t payload_size(std::span<const ChunkGrid> grids, std::int64_t k) {
  std::uint64_t total = 0;
  for (const auto& g : grids) {
    total += kCompressedHeaderBytes +
             static_cast<std::uint64_t>(g.chunk_count() * effective_k(g, k)) * kBytesPerCoefficient;
  }
  return total;
}

std::uint64_t dense_payload_size(std::span<const Shape> shapes) {
  std::uint64_t total = 0;
  for (const auto& s : shapes) total += 4u * static_cast<std::uint64_t>(shape_volume(s));
  return total;
}

}  // namespace dlcmd
