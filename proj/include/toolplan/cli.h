//
// Copyright 2026 The toolplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Command-line front end. The binary in tools/ only forwards to RunCli so
// that tests can drive every subcommand in process.

#ifndef TOOLPLAN_CLI_H_
#define TOOLPLAN_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace toolplan {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;  // ran, but the agent failed or replay diverged
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInfrastructure = 3;

// args[0] is the program name.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace toolplan

#endif  // TOOLPLAN_CLI_H_
