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

#include "dlcmd/local_collective.hpp"

#include <exception>

namespace dlcmd {

LocalHub::LocalHub(int world_size, std::chrono::milliseconds timeout) : world_(world_size), timeout_(timeout) {}

std::vector<Bytes> LocalHub::exchange(int rank, std::uint64_t seq, MessageType type, std::uint32_t round,
                                      const Bytes& body) {
  std::unique_lock lock(mu_);
  if (aborted_) throw CollectiveError("collective aborted: " + *aborted_, -1);

  auto& slot = ops_[seq];
  if (slot.deposits.empty()) slot.deposits.resize(static_cast<std::size_t>(world_));
  slot.deposits[static_cast<std::size_t>(rank)] = Deposit{type, round, body};
  ++slot.arrived;
  cv_.notify_all();

  const bool complete = cv_.wait_for(lock, timeout_, [&] { return aborted_ || slot.arrived == world_; });
  if (aborted_) throw CollectiveError("collective aborted: " + *aborted_, -1);
  if (!complete) {
    int missing = -1;
    for (int r = 0; r < world_; ++r) {
      if (!slot.deposits[static_cast<std::size_t>(r)]) {
        missing = r;
        break;
      }
    }
    throw CollectiveTimeoutError("collective timed out in round " + std::to_string(round) + " waiting for rank " +
                                     std::to_string(missing),
                                 missing);
  }

  std::vector<Bytes> out;
  out.reserve(static_cast<std::size_t>(world_));
  std::exception_ptr error;
  for (int r = 0; r < world_; ++r) {
    const auto& d = *slot.deposits[static_cast<std::size_t>(r)];
    if (!error && d.round != round) {
      error = std::make_exception_ptr(RoundMismatchError("rank " + std::to_string(r) + " is in round " +
                                                             std::to_string(d.round) + ", rank " +
                                                             std::to_string(rank) + " in round " + std::to_string(round),
                                                         r));
    } else if (!error && d.type != type) {
      error = std::make_exception_ptr(MalformedFrameError("rank " + std::to_string(r) + " sent a " +
                                                              message_type_name(d.type) + " message, expected " +
                                                              message_type_name(type),
                                                          r));
    }
    out.push_back(d.body);
  }
  if (++slot.readers == world_) ops_.erase(seq);
  if (error) std::rethrow_exception(error);
  return out;
}

void LocalHub::abort(const std::string& reason) {
  std::lock_guard lock(mu_);
  if (!aborted_) aborted_ = reason;
  cv_.notify_all();
}

LocalCollective::LocalCollective(int rank, int world_size, std::shared_ptr<LocalHub> hub)
    : Collective(rank, world_size), hub_(std::move(hub)) {}

std::vector<Bytes> LocalCollective::exchange(MessageType type, std::uint32_t round, const Bytes& body) {
  return hub_->exchange(rank(), seq_++, type, round, body);
}

LocalGroup make_local_group(int world_size, std::chrono::milliseconds timeout) {
  LocalGroup group{std::make_shared<LocalHub>(world_size, timeout), {}};
  for (int r = 0; r < world_size; ++r) group.members.push_back(std::make_unique<LocalCollective>(r, world_size, group.hub));
  return group;
}

}  // namespace dlcmd
