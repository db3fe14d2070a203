#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

namespace nq
{
    /// Runs fn(replica) for replica = 0..replicas-1 on up to `jobs` threads.
    ///
    /// Results come back in replica order whatever the completion order. If any
    /// replica throws, the exception of the lowest failing replica is rethrown
    /// after all workers stop.
    template <class Fn>
    auto run_replicas(int replicas, int jobs, Fn&& fn) -> std::vector<decltype(fn(0))>
    {
        using Result = decltype(fn(0));
        if (replicas < 0)
        {
            throw std::invalid_argument("replica count must be non-negative");
        }
        std::vector<std::optional<Result>> slots(static_cast<std::size_t>(replicas));
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(replicas));
        std::atomic<int> next{0};

        auto worker = [&] {
            for (int r = next++; r < replicas; r = next++)
            {
                try
                {
                    slots[static_cast<std::size_t>(r)].emplace(fn(r));
                }
                catch (...)
                {
                    errors[static_cast<std::size_t>(r)] = std::current_exception();
                }
            }
        };

        const int threads = std::clamp(jobs, 1, std::max(replicas, 1));
        if (threads == 1)
        {
            worker();
        }
        else
        {
            std::vector<std::jthread> pool;
            pool.reserve(static_cast<std::size_t>(threads));
            for (int i = 0; i < threads; ++i)
            {
                pool.emplace_back(worker);
            }
        }

        for (const auto& e : errors)
        {
            if (e)
            {
                std::rethrow_exception(e);
            }
        }
        std::vector<Result> out;
        out.reserve(slots.size());
        for (auto& s : slots)
        {
            out.push_back(std::move(*s));
        }
        return out;
    }
} // namespace nq
