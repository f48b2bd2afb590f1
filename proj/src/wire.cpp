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

#include "dlcmd/wire.hpp"

#include <algorithm>

namespace dlcmd::wire {

std::array<std::uint8_t, kHeaderBytes> encode_header(const FrameHeader& header) {
  Bytes buf;
  buf.reserve(kHeaderBytes);
  ByteWriter w(buf);
  w.put<std::uint32_t>(kMagic);
  w.put<std::uint8_t>(kVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(header.type));
  w.put<std::uint32_t>(header.round);
  w.put<std::uint16_t>(header.rank);
  w.put<std::uint64_t>(header.body_length);
  std::array<std::uint8_t, kHeaderBytes> out{};
  std::copy(buf.begin(), buf.end(), out.begin());
  return out;
}

FrameHeader decode_header(std::span<const std::uint8_t> bytes, int peer) {
  if (bytes.size() < kHeaderBytes) throw MalformedFrameError("frame header truncated", peer);
  ByteReader r(bytes.first(kHeaderBytes));
  const auto magic = r.get<std::uint32_t>();
  if (magic != kMagic) throw MalformedFrameError("bad frame magic from rank " + std::to_string(peer), peer);
  const auto version = r.get<std::uint8_t>();
  if (version != kVersion) {
    throw MalformedFrameError("unsupported protocol version " + std::to_string(version) + " from rank " +
                                  std::to_string(peer),
                              peer);
  }
  const auto type = r.get<std::uint8_t>();
  if (type < 1 || type > 3) throw MalformedFrameError("unknown message type " + std::to_string(type), peer);
  FrameHeader h{static_cast<MessageType>(type), 0, 0, 0};
  h.round = r.get<std::uint32_t>();
  h.rank = r.get<std::uint16_t>();
  h.body_length = r.get<std::uint64_t>();
  if (h.body_length > kMaxBodyBytes) throw MalformedFrameError("frame body too large", peer);
  return h;
}

}  // namespace dlcmd::wire
