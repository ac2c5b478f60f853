// Copyright 2026 The GEPS Authors.
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

#include <sys/types.h>

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace geps {

/// A spawned child with its stdout on a pipe. The destructor sends SIGTERM
/// and reaps the child if it is still running.
class ChildProcess {
 public:
  /// argv[0] is the executable path. stderr goes to `stderr_path` when given,
  /// otherwise it is inherited. Throws std::system_error.
  static ChildProcess spawn(const std::vector<std::string>& argv,
                            const std::optional<std::filesystem::path>& stderr_path = std::nullopt);

  ChildProcess() = default;
  ~ChildProcess();
  ChildProcess(ChildProcess&& other) noexcept;
  ChildProcess& operator=(ChildProcess&& other) noexcept;
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  pid_t pid() const { return pid_; }

  /// Next line of stdout without the newline, or nullopt on EOF or timeout.
  std::optional<std::string> read_line(std::chrono::milliseconds timeout);

  void signal(int sig);
  /// Waits for exit and returns the exit status, or 128 + signal number.
  int wait();
  /// SIGTERM, then SIGKILL if the child is still alive after `grace`.
  int terminate(std::chrono::milliseconds grace = std::chrono::milliseconds(3000));

 private:
  pid_t pid_ = -1;
  int out_fd_ = -1;
  std::string buffer_;
  std::optional<int> status_;
};

}  // namespace geps
