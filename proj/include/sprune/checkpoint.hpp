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

#include <filesystem>

#include "sprune/model.hpp"

namespace sprune {

// Checkpoint directory layout:
//   config.json    every ModelConfig field, per-layer widths listed explicitly
//   weights.bin    row-major little-endian float64 tensors, concatenated
//   manifest.json  [{name, shape, offset, length}] in weights.bin order
void save_model(const Model& model, const std::filesystem::path& directory);
Model load_model(const std::filesystem::path& directory);

}  // namespace sprune
