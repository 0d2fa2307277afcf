#pragma once

// Slot-indexed parallel loop: worker w handles items w, w+T, w+2T, ...
// Each item writes only its own output slot, so results are positionally
// deterministic and independent of scheduling. Exceptions from workers
// are captured and rethrown on the calling thread.

#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace ctv {

inline int clamp_thread_count(int requested) {
    if (requested < 1) requested = 1;
    const unsigned hw = std::thread::hardware_concurrency();
    const int cap = hw == 0 ? 16 : static_cast<int>(hw) * 4;
    return requested > cap ? cap : requested;
}

template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
    threads = clamp_thread_count(threads);
    if (threads == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const auto t = static_cast<std::size_t>(threads);
    std::vector<std::exception_ptr> errors(t);
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (std::size_t w = 0; w < t; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < count; i += t) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace ctv
