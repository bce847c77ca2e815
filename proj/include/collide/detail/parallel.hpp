#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace collide::detail {

/// Splits [0, count) into at most `threads` contiguous chunks and runs
/// fn(chunk_index, begin, end) for each, chunk 0 on the calling thread.
template <class Fn>
void parallel_chunks(unsigned threads, std::size_t count, Fn&& fn)
{
    const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(threads, count));
    if (chunks == 1) {
        fn(std::size_t{0}, std::size_t{0}, count);
        return;
    }
    const std::size_t base = count / chunks;
    const std::size_t extra = count % chunks;
    auto bounds = [&](std::size_t c) {
        const std::size_t begin = c * base + std::min(c, extra);
        return std::pair{begin, begin + base + (c < extra ? 1 : 0)};
    };
    std::vector<std::jthread> workers;
    workers.reserve(chunks - 1);
    for (std::size_t c = 1; c < chunks; ++c) {
        const auto [b, e] = bounds(c);
        workers.emplace_back([&fn, c, b = b, e = e] { fn(c, b, e); });
    }
    const auto [b0, e0] = bounds(0);
    fn(std::size_t{0}, b0, e0);
}

} // namespace collide::detail
