// Copyright 2026 The namerec Authors.
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

#ifndef NAMEREC_CLI_H_
#define NAMEREC_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace namerec {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumerical = 3,
};

// Runs one subcommand. `args` excludes the program name, e.g.
// {"train", "--train", "data/train.jsonl", "--checkpoint", "m.ckpt"}.
// Results go to `out`, logs and errors to `err`.
int dispatch(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);
int dispatch(const std::vector<std::string>& args);

}  // namespace namerec

#endif  // NAMEREC_CLI_H_
