/*
 Copyright 2026 The vimppi Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/


#ifndef VIMPPI_PARALLEL_HPP
#define VIMPPI_PARALLEL_HPP

#include <cstddef>
#include <cstdint>
#include <memory>

#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

namespace vimppi {

/// Derives a well-mixed stream seed from a master seed and a stream index.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}



/**
 * @brief SplitMix64 bit generator.
 *
 * Seeding is free, which suits the one-stream-per-sample layout of the
 * rollout batch. Satisfies UniformRandomBitGenerator.
 */
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit constexpr SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    constexpr result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/**
 * @brief Fixed-size pool for index-parallel loops.
 *
 * Loop bodies must write only to their own index; results are then
 * independent of the worker count. A pool with one worker runs inline.
 */
class WorkerPool {
public:
    /// workers == 0 picks the hardware concurrency.
    explicit WorkerPool(int workers = 1)
        : workers_(workers > 0 ? workers : tbb::this_task_arena::max_concurrency()) {
        if (workers_ > 1) arena_ = std::make_unique<tbb::task_arena>(workers_);
    }

    int workers() const { return workers_; }

    template <typename Body>
    void parallel_for(std::size_t n, Body&& body) const {
        if (!arena_) {
            for (std::size_t i = 0; i < n; ++i) body(i);
            return;
        }
        arena_->execute([&] {
            tbb::parallel_for(tbb::blocked_range<std::size_t>(0, n),
                              [&](const tbb::blocked_range<std::size_t>& r) {
                                  for (std::size_t i = r.begin(); i != r.end(); ++i) body(i);
                              });
        });
    }

private:
    int workers_;
    std::unique_ptr<tbb::task_arena> arena_;
};

}  // namespace vimppi

#endif  // VIMPPI_PARALLEL_HPP
