#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

namespace annulab {

class ReplicateError : public std::runtime_error {
public:
    ReplicateError(std::size_t replicate, const std::string& what)
        : std::runtime_error("replicate " + std::to_string(replicate) + ": " + what),
          replicate_(replicate) {}
    std::size_t replicate() const { return replicate_; }

private:
    std::size_t replicate_;
};

inline unsigned default_workers() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Runs fn(i) for i in [0, n) on a pool of workers and returns the results in
/// index order. The output does not depend on the worker count as long as fn(i)
/// depends only on i. The first failure is rethrown as ReplicateError.
template <class F>
auto map_replicates(std::size_t n, unsigned workers, F&& fn)
    -> std::vector<std::invoke_result_t<F&, std::size_t>> {
    using R = std::invoke_result_t<F&, std::size_t>;
    std::vector<R> out(n);
    if (workers == 0) workers = default_workers();
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));

    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex err_mu;
    std::exception_ptr first_err;
    std::size_t err_index = 0;

    auto body = [&] {
        for (;;) {
            if (stop.load(std::memory_order_relaxed)) return;
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            try {
                out[i] = fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!first_err || i < err_index) {
                    first_err = std::current_exception();
                    err_index = i;
                }
                stop.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };

    if (workers <= 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
        for (auto& t : pool) t.join();
    }

    if (first_err) {
        try {
            std::rethrow_exception(first_err);
        } catch (const std::exception& e) {
            throw ReplicateError(err_index, e.what());
        } catch (...) {
            throw ReplicateError(err_index, "unknown error");
        }
    }
    return out;
}

}  // namespace annulab
