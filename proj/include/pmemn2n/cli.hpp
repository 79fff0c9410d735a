// Copyright 2026 The pmemn2n Authors. All Rights Reserved.
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

#ifndef PMEMN2N_CLI_HPP_
#define PMEMN2N_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace pmemn2n {

enum ExitCode : int { kExitOk = 0, kExitInternal = 1, kExitUsage = 2 };

// Runs one command line (without the program name). Output goes to `out`,
// diagnostics to `err`; `in` feeds the chat REPL. Never throws.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err);

}  // namespace pmemn2n

#endif  // PMEMN2N_CLI_HPP_
