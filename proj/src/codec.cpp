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

#include "dlcmd/codec.hpp"

#include <limits>

namespace dlcmd {

Bytes encode_compressed(std::span<const CompressedMomentum> set) {
  Bytes out;
  std::size_t total = 0;
  for (const auto& q : set) total += kCompressedHeaderBytes + q.indices.size() * kBytesPerCoefficient;
  out.reserve(total);
  ByteWriter w(out);
  for (const auto& q : set) {
    if (q.k < 1 || q.k > std::numeric_limits<std::uint16_t>::max()) throw std::invalid_argument("encode: k does not fit u16");
    if (q.chunk_count() > std::numeric_limits<std::uint32_t>::max()) throw std::invalid_argument("encode: too many chunks");
    if (static_cast<std::int64_t>(q.indices.size()) != q.chunk_count() * q.k || q.amplitudes.size() != q.indices.size()) {
      throw std::invalid_argument("encode: payload length does not match chunk count * k");
    }
    w.put<std::uint16_t>(q.tensor_id);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(q.chunk_count()));
    w.put<std::uint16_t>(static_cast<std::uint16_t>(q.k));
    for (std::int64_t c = 0; c < q.chunk_count(); ++c) {
      const auto base = static_cast<std::size_t>(c * q.k);
      for (std::int64_t j = 0; j < q.k; ++j) w.put<std::uint32_t>(q.indices[base + static_cast<std::size_t>(j)]);
      for (std::int64_t j = 0; j < q.k; ++j) w.put_f32(q.amplitudes[base + static_cast<std::size_t>(j)]);
    }
  }
  return out;
}

std::vector<CompressedMomentum> decode_compressed(std::span<const std::uint8_t> bytes, std::span<const ChunkGrid> grids) {
  ByteReader r(bytes);
  std::vector<CompressedMomentum> out;
  while (r.remaining() > 0) {
    const auto id = r.get<std::uint16_t>();
    const auto chunks = r.get<std::uint32_t>();
    const auto k = r.get<std::uint16_t>();
    if (id >= grids.size()) throw DecodeError("decode: unknown tensor id " + std::to_string(id));
    const ChunkGrid& grid = grids[id];
    if (chunks != grid.chunk_count()) {
      throw DecodeError("decode: tensor " + std::to_string(id) + " has " + std::to_string(chunks) +
                        " chunks, expected " + std::to_string(grid.chunk_count()));
    }
    if (k == 0 || k > grid.chunk_volume()) throw DecodeError("decode: k=" + std::to_string(k) + " out of range");
    CompressedMomentum q{id, grid, k, {}, {}};
    q.indices.reserve(static_cast<std::size_t>(chunks) * k);
    q.amplitudes.reserve(q.indices.capacity());
    for (std::uint32_t c = 0; c < chunks; ++c) {
      for (std::uint16_t j = 0; j < k; ++j) {
        const auto idx = r.get<std::uint32_t>();
        if (idx >= grid.chunk_volume()) throw DecodeError("decode: frequency index " + std::to_string(idx) + " out of range");
        q.indices.push_back(idx);
      }
      for (std::uint16_t j = 0; j < k; ++j) q.amplitudes.push_back(r.get_f32());
    }
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace dlcmd
