// Copyright 2026 The visdebate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace visdebate {

/// Runs `task(i)` for i in [0, n) on at most `width` threads. Workers stop
/// taking new indices once `stop` is set; tasks already started finish.
/// Returns the number of tasks started. The first exception escaping a task
/// stops the pool and is rethrown.
template <typename Task>
std::size_t run_bounded(std::size_t n, int width, Task&& task,
                        const std::atomic<bool>* stop = nullptr) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      if (failed.load() || (stop != nullptr && stop->load())) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        task(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };

  const auto threads = static_cast<std::size_t>(std::max(1, width));
  {
    std::vector<std::jthread> pool;
    pool.reserve(std::min(threads, n));
    for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
  return std::min(next.load(), n);
}

}  // namespace visdebate
