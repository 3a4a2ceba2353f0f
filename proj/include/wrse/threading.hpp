#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>
#include <vector>

namespace wrse {

inline int hardware_workers() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

/// Runs fn(task_index) for every index in `order` on up to `workers` threads.
/// Tasks are pulled from a shared queue, so callers must make each task write
/// only to its own output slot; under that contract the result is identical to
/// sequential execution for any worker count.
template <typename Fn>
void parallel_tasks_ordered(const std::vector<std::size_t>& order, int workers, Fn&& fn) {
    const std::size_t n_tasks = order.size();
    if (workers <= 1 || n_tasks <= 1) {
        for (std::size_t i = 0; i < n_tasks; ++i) fn(order[i]);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            const std::size_t slot = next.fetch_add(1, std::memory_order_relaxed);
            if (slot >= n_tasks) return;
            try {
                fn(order[slot]);
            } catch (...) {
                {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
                next.store(n_tasks, std::memory_order_relaxed);
                return;
            }
        }
    };
    const int n_threads = static_cast<int>(std::min<std::size_t>(
        static_cast<std::size_t>(workers), n_tasks));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads) - 1);
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(body);
    body();
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

template <typename Fn>
void parallel_tasks(std::size_t n_tasks, int workers, Fn&& fn) {
    std::vector<std::size_t> order(n_tasks);
    std::iota(order.begin(), order.end(), std::size_t{0});
    parallel_tasks_ordered(order, workers, std::forward<Fn>(fn));
}

/// Splits [0, n) into contiguous chunks and runs fn(begin, end) per chunk.
template <typename Fn>
void parallel_chunks(std::size_t n, int workers, Fn&& fn) {
    if (n == 0) return;
    const std::size_t n_chunks =
        workers <= 1 ? 1 : std::min<std::size_t>(n, static_cast<std::size_t>(workers) * 4);
    const std::size_t chunk = (n + n_chunks - 1) / n_chunks;
    parallel_tasks(n_chunks, workers, [&](std::size_t c) {
        const std::size_t begin = c * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin < end) fn(begin, end);
    });
}

}  // namespace wrse
