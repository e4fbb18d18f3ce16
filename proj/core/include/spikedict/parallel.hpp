#pragma once

#include <thread>
#include <vector>

#include <Eigen/Core>

namespace spikedict {

/// Runs body(begin, end) over a static partition of [0, n).
/// Each index must write only to its own output slots; under that contract
/// the result is bit-identical for every thread count, including 1.
template <typename Body>
void parallel_for(Eigen::Index n, int threads, const Body& body) {
    if (n <= 0) return;
    if (threads <= 1 || n < 2 * threads) {
        body(Eigen::Index{0}, n);
        return;
    }
    const Eigen::Index chunk = (n + threads - 1) / threads;
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        const Eigen::Index begin = static_cast<Eigen::Index>(t) * chunk;
        if (begin >= n) break;
        const Eigen::Index end = std::min(begin + chunk, n);
        workers.emplace_back([&body, begin, end] { body(begin, end); });
    }
    for (auto& w : workers) w.join();
}

}  // namespace spikedict
