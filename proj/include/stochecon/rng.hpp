#pragma once

// Counter-based random streams.
//
// Every replica of a Monte Carlo run owns a Philox4x32-10 stream keyed by the
// run seed and addressed by (stream id, block counter). A replica's draws
// therefore depend only on (seed, stream id) and never on which worker
// thread happened to execute it.

#include <array>
#include <cstdint>
#include <limits>

namespace stochecon::rng {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
Philox4x32Counter philox4x32_10(Philox4x32Counter ctr, Philox4x32Key key) noexcept;

/// SplitMix64 finalizer; used to derive independent keys from (seed, tag).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// A single reproducible stream. Satisfies UniformRandomBitGenerator.
class Stream {
public:
    using result_type = std::uint32_t;

    Stream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept;

    std::uint64_t next_u64() noexcept;

private:
    void refill() noexcept;

    Philox4x32Key key_;
    std::uint64_t stream_id_;
    std::uint64_t block_ = 0;
    Philox4x32Counter buffer_{};
    int used_ = 4;
};

/// Derives a sub-seed for a named purpose (e.g. one value of n in a sweep).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept
{
    return splitmix64(seed ^ splitmix64(tag + 0x632BE59BD9B4E019ULL));
}

}  // namespace stochecon::rng
