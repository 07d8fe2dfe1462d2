// Copyright 2026 The acueval Authors.
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

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace acueval {

inline constexpr std::string_view kToolVersion = "0.1.0";

// Runs one subcommand. `args` excludes the program name. Returns 0 on
// success, 2 on bad arguments or missing inputs, 1 on computation errors.
int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace acueval
