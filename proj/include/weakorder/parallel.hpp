// Copyright 2026 The weakorder Authors
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

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace weakorder {

/// Worker cap: WEAKORDER_THREADS if set to a positive integer, otherwise the
/// hardware concurrency.
inline std::size_t worker_count() {
    if (const char *env = std::getenv("WEAKORDER_THREADS")) {
        char *end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) {
            return static_cast<std::size_t>(v);
        }
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Calls fn(i) for i in [0, n) across up to worker_count() threads. Work is
/// split into contiguous index ranges; callers write results into slot i so
/// the outcome does not depend on scheduling. The first exception (lowest
/// index) is rethrown after all workers join.
template <typename Fn>
void parallel_for(std::size_t n, Fn &&fn) {
    const std::size_t workers = std::min(worker_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = n * w / workers;
        const std::size_t end = n * (w + 1) / workers;
        threads.emplace_back([&, begin, end] {
            for (std::size_t i = begin; i < end; ++i) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto &t : threads) {
        t.join();
    }
    for (const auto &e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}  // namespace weakorder
