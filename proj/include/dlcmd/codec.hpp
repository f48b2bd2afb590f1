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
#include <vector>

#include "dlcmd/bytes.hpp"
#include "dlcmd/compression.hpp"

namespace dlcmd {

// Per tensor: id (u16), chunk count (u32), k (u16).
inline constexpr std::uint64_t kCompressedHeaderBytes = 8;
// Per retained coefficient: u32 index + f32 amplitude.
inline constexpr std::uint64_t kBytesPerCoefficient = 8;

// Wire layout, little-endian. For each tensor the header above, then per
// chunk k u32 indices followed by k f32 amplitudes.
Bytes encode_compressed(std::span<const CompressedMomentum> set);

// `grids[i]` is the grid of tensor id i. Rejects unknown ids, chunk-count
// mismatches, out-of-range indices and trailing bytes.
std::vector<CompressedMomentum> decode_compressed(std::span<const std::uint8_t> bytes, std::span<const ChunkGrid> grids);

}  // namespace dlcmd
