#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace sag {

/// Calls fn(i) for i in [0, n) on at most `workers` threads. Exceptions are
/// captured per index; the result holds null for indices that succeeded.
template <class Fn>
std::vector<std::exception_ptr> parallel_indexed(std::size_t n, std::size_t workers, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    workers = std::min(std::max<std::size_t>(workers, 1), n);
    if (workers <= 1) {
        work();
        return errors;
    }
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    return errors;
}

}  // namespace sag
