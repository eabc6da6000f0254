#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace estc {

/// Runs body(begin, end) over a static partition of [0, count) into at most `threads`
/// contiguous chunks. The partition depends only on (count, threads), so any reduction the
/// caller performs per chunk is reproducible.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
    if (count == 0) return;
    const std::size_t parts = std::clamp<std::size_t>(threads, 1, count);
    if (parts == 1) {
        body(std::size_t{0}, count);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(parts - 1);
    const std::size_t step = count / parts;
    const std::size_t extra = count % parts;
    std::size_t begin = 0;
    std::size_t first_end = 0;
    for (std::size_t p = 0; p < parts; ++p) {
        const std::size_t end = begin + step + (p < extra ? 1 : 0);
        if (p == 0) {
            first_end = end;
        } else {
            pool.emplace_back([&body, begin, end] { body(begin, end); });
        }
        begin = end;
    }
    body(std::size_t{0}, first_end);
}

/// Thread count for a request of 0 ("use the hardware").
inline unsigned resolve_threads(unsigned requested) {
    if (requested != 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

}  // namespace estc
