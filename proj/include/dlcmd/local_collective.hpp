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

#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "dlcmd/collective.hpp"

namespace dlcmd {

// Rendezvous point shared by the in-process workers of one group.
class LocalHub {
 public:
  LocalHub(int world_size, std::chrono::milliseconds timeout);

  std::vector<Bytes> exchange(int rank, std::uint64_t seq, MessageType type, std::uint32_t round, const Bytes& body);

  // Wakes every waiting worker with a CollectiveError. Used when one worker
  // fails so the others do not sit out the timeout.
  void abort(const std::string& reason);

 private:
  struct Deposit {
    MessageType type;
    std::uint32_t round;
    Bytes body;
  };
  struct Slot {
    std::vector<std::optional<Deposit>> deposits;
    int arrived = 0;
    int readers = 0;
  };

  int world_;
  std::chrono::milliseconds timeout_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::uint64_t, Slot> ops_;
  std::optional<std::string> aborted_;
};

class LocalCollective final : public Collective {
 public:
  LocalCollective(int rank, int world_size, std::shared_ptr<LocalHub> hub);

 protected:
  std::vector<Bytes> exchange(MessageType type, std::uint32_t round, const Bytes& body) override;

 private:
  std::shared_ptr<LocalHub> hub_;
  std::uint64_t seq_ = 0;
};

struct LocalGroup {
  std::shared_ptr<LocalHub> hub;
  std::vector<std::unique_ptr<LocalCollective>> members;
};

LocalGroup make_local_group(int world_size, std::chrono::milliseconds timeout = std::chrono::seconds(30));

}  // namespace dlcmd
