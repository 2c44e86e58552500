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

#include <iostream>
#include <string>
#include <vector>

namespace sprune {

// Entry point of the `sprune` executable. args[0] is the program name.
// Returns 0 on success, 2 on flag or config errors (after printing usage) and
// 1 on runtime failures.
int run_cli(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace sprune
