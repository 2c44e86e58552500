// Copyright (c) 2026 The sprune Authors. All Rights Reserved.
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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sprune {

// Old-id -> new-id translation produced by vocabulary compaction. The new id
// of a kept token is its position in the kept list.
struct VocabMapping {
  static constexpr std::int64_t kRemoved = -1;

  std::vector<std::int64_t> old_to_new;
  std::vector<std::int32_t> new_to_old;

  static VocabMapping from_kept(std::size_t old_size, std::span<const std::int32_t> kept_ids);

  bool kept(std::int32_t old_id) const;
  std::int32_t map(std::int32_t old_id) const;
  // Maps every id; throws ContractError if any id was removed.
  std::vector<std::int32_t> map(std::span<const std::int32_t> old_ids) const;
  bool is_identity() const;

  friend bool operator==(const VocabMapping&, const VocabMapping&) = default;
};

}  // namespace sprune
