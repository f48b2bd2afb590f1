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

#include <filesystem>
#include <string>
#include <vector>

#include "dlcmd/bytes.hpp"
#include "dlcmd/tensor.hpp"

namespace dlcmd {

struct Checkpoint {
  std::vector<std::string> names;
  ParamSet tensors;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

// "DCKP", u32 version, u32 tensor count; per tensor u16 name length, name,
// u32 rank, u64 extents, then raw f32 values. Little-endian.
Bytes encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dlcmd
