#ifndef AOI_HLF_DETAIL_PARALLEL_HPP
#define AOI_HLF_DETAIL_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

namespace aoi_hlf::detail {

// Independent generator for substream `stream` of master `seed`.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x5eedu};
    return std::mt19937_64(seq);
}

// Runs body(chunk) for chunk in [0, chunks) on up to `workers` threads.
// Results must be written per chunk so the merge is worker-count invariant.
template <typename Body>
void for_each_chunk(std::size_t chunks, unsigned workers, Body body)
{
    if (workers == 0)
        workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, chunks));
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c)
            body(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t c = next++; c < chunks; c = next++)
                body(c);
        });
}

} // namespace aoi_hlf::detail

#endif
