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

#include "dlcmd/checkpoint.hpp"

#include <fstream>
#include <iterator>

namespace dlcmd {

namespace {
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr char kCheckpointMagic[] = "DCKP";
}  // namespace

Bytes encode_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.names.size() != ckpt.tensors.size()) throw std::invalid_argument("checkpoint: names and tensors differ in count");
  Bytes out;
  ByteWriter w(out);
  for (int i = 0; i < 4; ++i) w.put<std::uint8_t>(static_cast<std::uint8_t>(kCheckpointMagic[i]));
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (std::size_t i = 0; i < ckpt.tensors.size(); ++i) {
    const auto& name = ckpt.names[i];
    if (name.size() > 0xFFFF) throw std::invalid_argument("checkpoint: tensor name too long");
    w.put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    w.put_bytes(std::span(reinterpret_cast<const std::uint8_t*>(name.data()), name.size()));
    const auto& t = ckpt.tensors[i];
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (auto extent : t.shape()) w.put<std::uint64_t>(static_cast<std::uint64_t>(extent));
    for (std::int64_t j = 0; j < t.size(); ++j) w.put_f32(t[j]);
  }
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const auto magic = r.get_bytes(4);
  if (std::string(magic.begin(), magic.end()) != kCheckpointMagic) throw DecodeError("not a checkpoint");
  if (r.get<std::uint32_t>() != kCheckpointVersion) throw DecodeError("unsupported checkpoint version");
  const auto count = r.get<std::uint32_t>();
  Checkpoint ckpt;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.get<std::uint16_t>();
    const auto name = r.get_bytes(len);
    ckpt.names.emplace_back(name.begin(), name.end());
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) throw DecodeError("checkpoint: implausible tensor rank " + std::to_string(rank));
    Shape shape;
    for (std::uint32_t a = 0; a < rank; ++a) {
      const auto extent = r.get<std::uint64_t>();
      if (extent > (std::uint64_t{1} << 32)) throw DecodeError("checkpoint: implausible extent");
      shape.push_back(static_cast<std::int64_t>(extent));
    }
    if (static_cast<std::uint64_t>(shape_volume(shape)) * 4 > r.remaining()) throw DecodeError("checkpoint: truncated tensor");
    DenseTensor t(shape);
    for (std::int64_t j = 0; j < t.size(); ++j) t[j] = r.get_f32();
    ckpt.tensors.push_back(std::move(t));
  }
  if (r.remaining() != 0) throw DecodeError("checkpoint: trailing bytes");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const Bytes buf = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const Bytes buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(buf);
}

}  // namespace dlcmd
