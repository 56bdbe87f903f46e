/*
 * Copyright 2026 The FLoRA Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FLORA_TOOLS_CLI_HPP_
#define FLORA_TOOLS_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace flora::cli {

// Runs the `flora` command line. `args` excludes the program name.
// Returns the process exit code: 0 ok, 2 config, 3 data, 4 runtime.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace flora::cli

#endif  // FLORA_TOOLS_CLI_HPP_
