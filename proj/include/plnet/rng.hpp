#pragma once

// Counter-based random streams. A (master_seed, stream_id) pair fully
// determines a sequence, so any trial, site or sample can be regenerated
// independently of thread count and evaluation order.

#include <array>
#include <cstdint>
#include <limits>
#include <span>

namespace plnet {

/// Philox4x32 with 10 rounds (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

/// SplitMix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

struct RngStream {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_id = 0;

    /// Child stream number `index`; distinct indices give distinct children.
    RngStream substream(std::uint64_t index) const noexcept
    {
        return {master_seed, mix64(mix64(stream_id) ^ index)};
    }

    friend bool operator==(const RngStream&, const RngStream&) = default;
};

/// Sequential generator over one stream. Satisfies UniformRandomBitGenerator
/// so it can drive the <random> distributions.
class RngEngine {
public:
    using result_type = std::uint64_t;

    explicit RngEngine(const RngStream& stream) noexcept;

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform() noexcept
    {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal deviate (Box-Muller; the second value of each pair is cached).
    double normal() noexcept;

    void fill_normal(std::span<double> out) noexcept
    {
        for (double& v : out) v = normal();
    }

    double exponential() noexcept;

private:
    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> block_{};
    int next_word_ = 4;  // next unread 32-bit word of block_
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

}  // namespace plnet
