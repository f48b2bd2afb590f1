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

#include <array>
#include <cstdint>
#include <span>

#include "dlcmd/collective.hpp"

namespace dlcmd::wire {

inline constexpr std::uint32_t kMagic = 0x444D4C43;  // "DMLC"
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderBytes = 20;
inline constexpr std::uint64_t kMaxBodyBytes = std::uint64_t{1} << 36;

// magic u32 | version u8 | type u8 | round u32 | rank u16 | body length u64
struct FrameHeader {
  MessageType type;
  std::uint32_t round;
  std::uint16_t rank;
  std::uint64_t body_length;
};

std::array<std::uint8_t, kHeaderBytes> encode_header(const FrameHeader& header);

// Throws MalformedFrameError (attributed to `peer`) on bad magic, version,
// message type or an implausible body length.
FrameHeader decode_header(std::span<const std::uint8_t> bytes, int peer);

}  // namespace dlcmd::wire
